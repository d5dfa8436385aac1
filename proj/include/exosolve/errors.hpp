#pragma once

#include <stdexcept>

namespace exosolve {

/// Malformed input document (JSON syntax or missing/ill-typed fields).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a semantic constraint.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Estimator inputs disagree on vector dimensions or object ordering.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computation needed eye/wrist coordinates that the observation lacks.
struct SkeletonMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Embedding provider or resolver endpoint could not be reached or answered garbage.
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace exosolve
