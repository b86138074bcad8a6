#pragma once

#include <stdexcept>
#include <string>

namespace haarsense {

/// Signal grid too coarse for the requested quadrature or echo window.
struct ResolutionError : std::runtime_error {
  explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

/// Normalized contrast left the invertible branch of the arcsine (|phi| >= pi/2).
struct PhaseWrapError : std::runtime_error {
  explicit PhaseWrapError(const std::string& what) : std::runtime_error(what) {}
};

/// Bright and dark reference counts do not separate; contrast is undefined.
struct DegenerateReferenceError : std::runtime_error {
  explicit DegenerateReferenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Echo sequences of some order cannot be packed into signal runs.
struct PackingError : std::runtime_error {
  explicit PackingError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file (CSV/JSON structure, ragged rows, bad grid).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (missing file, unwritable path).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace haarsense
