#pragma once

#include <stdexcept>
#include <string>

namespace liesym {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (maps to CLI exit code 2).
struct InputError : Error {
  using Error::Error;
};

/// A negative power was evaluated at zero; the sample must be excluded.
struct PoleError : Error {
  using Error::Error;
};

}  // namespace liesym
