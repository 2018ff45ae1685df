#pragma once

#include <filesystem>
#include <vector>

#include "patflow/image.hpp"

namespace patflow {

/// Binary PGM (P5). Both 8-bit and 16-bit (big-endian) samples are accepted;
/// intensities are normalized by maxval on load.
GrayImage read_pgm(const std::filesystem::path& path);

/// Writes a 16-bit P5 file (maxval 65535).
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Single-channel PFM ("Pf", little-endian, scale -1.0). NaN marks invalid
/// pixels. Rows are stored bottom-to-top as the format requires.
DisparityMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const DisparityMap& disp);

/// Dot list with header `id,u,v`.
std::vector<Point2> read_dots_csv(const std::filesystem::path& path);
void write_dots_csv(const std::filesystem::path& path, const std::vector<Point2>& dots);

}  // namespace patflow
