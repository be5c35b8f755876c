#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace mvlab {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSymmetric : public Error {
 public:
  explicit NotSymmetric(double asymmetry)
      : Error("matrix is not symmetric (max |a_ij - a_ji| = " + std::to_string(asymmetry) + ")"),
        asymmetry_(asymmetry) {}
  double asymmetry() const { return asymmetry_; }

 private:
  double asymmetry_;
};

class NegativeEigenvalue : public Error {
 public:
  explicit NegativeEigenvalue(double min_eigenvalue)
      : Error("matrix has negative eigenvalue " + std::to_string(min_eigenvalue)),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class EllipticityViolated : public Error {
 public:
  EllipticityViolated(double min_eigenvalue, double lambda)
      : Error("ellipticity violated: lambda_min(a) = " + std::to_string(min_eigenvalue) +
              " < lambda^2 = " + std::to_string(lambda * lambda)),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class QuadratureNotConverged : public Error {
 public:
  using Error::Error;
};

class SingularGramian : public Error {
 public:
  explicit SingularGramian(double t)
      : Error("controllability Gramian is singular at t = " + std::to_string(t)), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

class SizeMismatch : public Error {
 public:
  using Error::Error;
};

class UnsupportedWeights : public Error {
 public:
  using Error::Error;
};

class SingularCovariance : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class TooFewParticles : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  explicit NonFiniteState(long step)
      : Error("non-finite particle state at step " + std::to_string(step)), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class StreamMismatch : public Error {
 public:
  using Error::Error;
};

class FlowHorizonTooShort : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class EstimatorDegenerate : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  using Error::Error;
};

class ParameterOutOfRange : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  ConfigInvalid(std::string field, const std::string& why)
      : Error("invalid config field '" + field + "': " + why), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ExperimentFailed : public Error {
 public:
  explicit ExperimentFailed(std::string check)
      : Error("experiment check failed: " + check), check_(std::move(check)) {}
  const std::string& check() const { return check_; }

 private:
  std::string check_;
};

}  // namespace mvlab
