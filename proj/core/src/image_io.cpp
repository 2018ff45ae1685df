#include "patflow/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "patflow/errors.hpp"
#include "patflow/format.hpp"

namespace patflow {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) return tok;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  if (tok.empty()) throw DataError("truncated header in " + path.string());
  return tok;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const auto tok = header_token(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad header value '" + tok + "' in " + path.string());
  }
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "P5") throw DataError("not a binary PGM: " + path.string());
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const int maxval = header_int(in, path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw DataError("bad PGM dimensions in " + path.string());
  }
  const bool wide = maxval > 255;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<unsigned char> raw(n * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw DataError("truncated PGM data in " + path.string());
  }
  GrayImage img(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = wide ? (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1] : raw[i];
    if (v > static_cast<unsigned>(maxval)) throw DataError("sample exceeds maxval in " + path.string());
    img[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
  std::vector<unsigned char> raw(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double c = std::clamp(img[i], 0.0, 1.0);
    const auto v = static_cast<unsigned>(std::lround(c * 65535.0));
    raw[2 * i] = static_cast<unsigned char>(v >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(v & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

DisparityMap read_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in, path) != "Pf") throw DataError("not a single-channel PFM: " + path.string());
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  double scale = 0.0;
  {
    const auto tok = header_token(in, path);
    try {
      scale = std::stod(tok);
    } catch (const std::exception&) {
      throw DataError("bad PFM scale in " + path.string());
    }
  }
  if (w <= 0 || h <= 0 || scale == 0.0) throw DataError("bad PFM header in " + path.string());
  const bool little = scale < 0.0;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<unsigned char> raw(n * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw DataError("truncated PFM data in " + path.string());
  }
  DisparityMap disp(w, h);
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;
    for (int x = 0; x < w; ++x) {
      const std::size_t off = (static_cast<std::size_t>(row) * w + x) * 4;
      std::uint32_t bits = little ? (std::uint32_t{raw[off]} | std::uint32_t{raw[off + 1]} << 8 |
                                     std::uint32_t{raw[off + 2]} << 16 |
                                     std::uint32_t{raw[off + 3]} << 24)
                                  : (std::uint32_t{raw[off + 3]} | std::uint32_t{raw[off + 2]} << 8 |
                                     std::uint32_t{raw[off + 1]} << 16 |
                                     std::uint32_t{raw[off]} << 24);
      const float f = std::bit_cast<float>(bits);
      if (std::isfinite(f)) {
        disp.values(x, y) = f;
        disp.valid(x, y) = 1;
      } else {
        disp.values(x, y) = 0.0;
        disp.valid(x, y) = 0;
      }
    }
  }
  return disp;
}

void write_pfm(const std::filesystem::path& path, const DisparityMap& disp) {
  auto out = open_out(path);
  const int w = disp.width();
  const int h = disp.height();
  out << "Pf\n" << w << ' ' << h << "\n-1.0\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 4);
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;
    for (int x = 0; x < w; ++x) {
      const float f = disp.is_valid(x, y) ? static_cast<float>(disp.values(x, y))
                                          : std::numeric_limits<float>::quiet_NaN();
      const auto bits = std::bit_cast<std::uint32_t>(f);
      const std::size_t off = (static_cast<std::size_t>(row) * w + x) * 4;
      for (int b = 0; b < 4; ++b) raw[off + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Point2> read_dots_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,u,v", 0) != 0) {
    throw DataError("missing `id,u,v` header in " + path.string());
  }
  std::vector<Point2> dots;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string id, u, v;
    if (!std::getline(row, id, ',') || !std::getline(row, u, ',') || !std::getline(row, v)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected id,u,v");
    }
    try {
      if (std::stoi(id) != static_cast<int>(dots.size())) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": ids must be 0..M-1 in order");
      }
      dots.push_back({std::stod(u), std::stod(v)});
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return dots;
}

void write_dots_csv(const std::filesystem::path& path, const std::vector<Point2>& dots) {
  auto out = open_out(path);
  out << "id,u,v\n";
  for (std::size_t i = 0; i < dots.size(); ++i) {
    out << i << ',' << fmt6(dots[i].x) << ',' << fmt6(dots[i].y) << '\n';
  }
}

}  // namespace patflow
