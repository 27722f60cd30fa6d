#pragma once

#include <stdexcept>
#include <string>

namespace feame {

/// Malformed input: bad CSV, out-of-range choice, wrong flag combination.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The data carry no information about the requested parameter
/// (e.g. every history sits in a singleton sufficiency class).
class IdentificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative estimator stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations, double gradient_norm)
      : std::runtime_error(what), iterations_(iterations), gradient_norm_(gradient_norm) {}

  int iterations() const noexcept { return iterations_; }
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  int iterations_;
  double gradient_norm_;
};

}  // namespace feame
