#pragma once

#include <stdexcept>
#include <string>

namespace citywalk {

/// Base for all recoverable failures raised by the library. Precondition
/// violations use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or record; message carries the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace citywalk
