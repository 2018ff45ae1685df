#pragma once

#include <stdexcept>
#include <string>

namespace patflow {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing input data: unreadable files, malformed headers, frame gaps.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values or preconditions on tunables.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace patflow
