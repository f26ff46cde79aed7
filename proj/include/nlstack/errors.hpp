#pragma once

#include <stdexcept>
#include <string>

namespace nlstack {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data (CSV rows, JSON documents, tag files).
struct ParseError : Error {
  using Error::Error;
};

// Structurally valid input that violates a model invariant.
struct ValidationError : Error {
  using Error::Error;
};

// Quantity requested outside a supported range (wavelength, depth).
struct RangeError : Error {
  using Error::Error;
};

// Least-squares fit failed to converge or the data is degenerate.
struct FitError : Error {
  using Error::Error;
};

// Statistic is undefined for the given samples (zero spread, no accidentals).
struct UndefinedStatError : Error {
  using Error::Error;
};

}  // namespace nlstack
