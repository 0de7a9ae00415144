#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace scatterkit {

enum class ErrorKind {
  invalid_input,
  domain,
  shape_mismatch,
  near_singular,
  degenerate,
  no_convergence,
  config,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::near_singular: return "near-singular";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::no_convergence: return "no-convergence";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when (1 - A) is too ill-conditioned to trust a solve. Carries the
/// condition estimate and a label of what was being solved, so callers up the
/// stack (channel solves, block systems, scans) can annotate the context.
class NearSingularError : public Error {
 public:
  NearSingularError(double condition, std::string quantity)
      : Error(ErrorKind::near_singular,
              "near-singular operator (" + quantity + "), condition estimate " +
                  std::to_string(condition)),
        condition_(condition),
        quantity_(std::move(quantity)) {}

  double condition() const noexcept { return condition_; }
  const std::string& quantity() const noexcept { return quantity_; }

  NearSingularError annotated(const std::string& context) const {
    return NearSingularError(condition_, context + ": " + quantity_);
  }

 private:
  double condition_;
  std::string quantity_;
};

}  // namespace scatterkit
