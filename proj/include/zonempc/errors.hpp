#pragma once

#include <stdexcept>
#include <string>

namespace zonempc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

class ModelConfigurationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class InvalidPartitionError : public Error {
 public:
  using Error::Error;
};

class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

class IllPosedWeightsError : public Error {
 public:
  using Error::Error;
};

class InvalidRecordError : public Error {
 public:
  using Error::Error;
};

// Raised when the integrator produces a non-finite temperature.
class IntegrationDivergenceError : public Error {
 public:
  IntegrationDivergenceError(int zone, const std::string& what)
      : Error(what), zone_(zone) {}
  int zone() const { return zone_; }

 private:
  int zone_;
};

class CoordinationIncompleteError : public Error {
 public:
  CoordinationIncompleteError(int neighbor, const std::string& what)
      : Error(what), neighbor_(neighbor) {}
  int neighbor() const { return neighbor_; }

 private:
  int neighbor_;
};

class UnstableMatrixError : public Error {
 public:
  UnstableMatrixError(double spectral_radius, const std::string& what)
      : Error(what), spectral_radius_(spectral_radius) {}
  double spectral_radius() const { return spectral_radius_; }

 private:
  double spectral_radius_;
};

// Wraps a controller failure with the step at which it happened.
class SolverFailure : public Error {
 public:
  SolverFailure(int step, const std::string& what) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

}  // namespace zonempc
