#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace alloclab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class SampleSizeError : public Error {
 public:
  using Error::Error;
};

class BoundaryError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotAvailableError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// Slab sampler ran out of attempts.
class EfficiencyError : public Error {
 public:
  EfficiencyError(const std::string& what, double hit_rate)
      : Error(what), hit_rate_(hit_rate) {}
  double hit_rate() const { return hit_rate_; }

 private:
  double hit_rate_;
};

/// Polytope without interior; carries indices of the violated constraints.
class FeasibilityError : public Error {
 public:
  FeasibilityError(const std::string& what, std::vector<int> violated)
      : Error(what), violated_(std::move(violated)) {}
  const std::vector<int>& violated() const { return violated_; }

 private:
  std::vector<int> violated_;
};

class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double suggested_step)
      : Error(what), suggested_step_(suggested_step) {}
  double suggested_step() const { return suggested_step_; }

 private:
  double suggested_step_;
};

}  // namespace alloclab
