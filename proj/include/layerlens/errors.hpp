#pragma once

#include <stdexcept>
#include <string>

namespace layerlens {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: ConfigError -> 2, DataError -> 3, NumericalError -> 4.

// Malformed or inconsistent configuration (files, CLI values, struct fields).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing, unreadable, or mutually inconsistent data artifacts.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape / dimension mismatches.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Out-of-domain scalar arguments (labels out of range, bad enum values, ...).
struct ValueError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf appearing where all values must stay finite, or a violated
// numerical invariant (broken similarity matrix, failed fixture assertion).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace layerlens
