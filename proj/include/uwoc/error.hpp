#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace uwoc {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A requested configuration cannot be realised (coloring, power cap, ...).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Degenerate anchor geometry (collinear anchors, singular normal matrix).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Least-squares design matrix without full column rank.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Input data carries no information (e.g. an all-zero impulse response).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Lookup of an unknown key (mobile user, node id).
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Several positions are equally consistent with the measurements.
class AmbiguityError : public Error {
 public:
  AmbiguityError(const std::string& what, std::vector<std::pair<double, double>> candidates)
      : Error(what), candidates_(std::move(candidates)) {}

  const std::vector<std::pair<double, double>>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<std::pair<double, double>> candidates_;
};

}  // namespace uwoc
