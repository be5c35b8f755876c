#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvlab/linalg.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/types.hpp"

namespace mvlab {

// Linear drift with mean-dependent noise:
//   dX = (B X + C E[X]) dt + E_noise (lambda dW + sigma_tilde(E[X]) dW~).
// Means and covariances of such a model follow closed ODEs.
struct LinearGaussianForm {
  Mat B;                                        // n x n
  Mat C;                                        // n x n
  Mat noise_embedding;                          // n x d
  double lambda = 0.0;
  std::function<Mat(const Vec& mean)> noise;    // sigma_tilde as a function of the mean, d x d
};

// Coefficients depend on the law only through the feature mean
// z = E[psi(X)] in R^p, so every measure derivative reduces to a z-derivative
// composed with the Jacobian of psi.
class MeanFieldModel {
 public:
  virtual ~MeanFieldModel() = default;

  virtual std::string name() const = 0;

  Eigen::Index dim() const { return dim_; }
  Eigen::Index noise_dim() const { return noise_dim_; }
  Eigen::Index feature_dim() const { return feature_dim_; }
  Eigen::Index degenerate_dim() const { return dim_ - noise_dim_; }
  double lambda() const { return lambda_; }
  const std::optional<HamiltonianStructure>& structure() const { return structure_; }
  bool degenerate() const { return structure_.has_value(); }

  virtual void feature(ConstVecRef x, VecRef out) const = 0;                   // p
  virtual void feature_jacobian(ConstVecRef x, MatRef out) const = 0;          // p x n
  virtual void drift(double t, ConstVecRef x, ConstVecRef z, VecRef out) const = 0;     // d
  virtual void drift_dx(double t, ConstVecRef x, ConstVecRef z, MatRef out) const = 0;  // d x n
  virtual void drift_dz(double t, ConstVecRef x, ConstVecRef z, MatRef out) const = 0;  // d x p
  virtual void sigma_tilde(double t, ConstVecRef z, MatRef out) const = 0;              // d x d
  // Partial derivative of sigma_tilde in z_k.
  virtual void sigma_tilde_dz(double t, ConstVecRef z, Eigen::Index k, MatRef out) const = 0;

  virtual std::optional<LinearGaussianForm> linear_form() const { return std::nullopt; }

  // Lipschitz constant of x -> b(t, x, mu) used by spot checks.
  virtual double lipschitz_x() const = 0;

 protected:
  MeanFieldModel(Eigen::Index dim, Eigen::Index noise_dim, Eigen::Index feature_dim, double lambda,
                 std::optional<HamiltonianStructure> structure);

 private:
  Eigen::Index dim_;
  Eigen::Index noise_dim_;
  Eigen::Index feature_dim_;
  double lambda_;
  std::optional<HamiltonianStructure> structure_;
};

// z = sum_i w_i psi(x_i), summed pairwise in particle order.
Vec feature_mean(const MeanFieldModel& model, const RowMat& points);
Vec feature_mean(const MeanFieldModel& model, const EmpiricalMeasure& mu);

Vec drift_at(const MeanFieldModel& model, double t, ConstVecRef x, const EmpiricalMeasure& mu);
Mat sigma_tilde_at(const MeanFieldModel& model, double t, const EmpiricalMeasure& mu);
// grad_v b(t, ., mu)(x).
Vec grad_x_drift(const MeanFieldModel& model, double t, ConstVecRef x, const EmpiricalMeasure& mu, ConstVecRef v);
// Kernel D^I b(t, x, .)(mu)(y), a d x n matrix.
Mat lions_drift(const MeanFieldModel& model, double t, ConstVecRef x, const EmpiricalMeasure& mu, ConstVecRef y);
// Kernel D^I sigma_tilde(t, mu)(y) as n matrices of size d x d, indexed by the
// tangent coordinate (output-row, output-col, tangent).
std::vector<Mat> lions_sigma(const MeanFieldModel& model, double t, const EmpiricalMeasure& mu, ConstVecRef y);
// sum_k d sigma_tilde / d z_k * g_k, the matrix that multiplies dW~ in the tangent equation.
Mat sigma_tilde_directional(const MeanFieldModel& model, double t, ConstVecRef z, ConstVecRef g);

// b(x, z) = B x + C z with psi(x) = P x, sigma_tilde = sqrt(s0^2 + kappa^2 |z|^2) I.
// B is d x n, P is p x n, C is d x p. With a structure the first m = n - d
// coordinates follow the Hamiltonian block.
class LinearFeatureModel : public MeanFieldModel {
 public:
  LinearFeatureModel(std::string name, Mat B, Mat C, Mat P, double lambda, double s0, double kappa,
                     std::optional<HamiltonianStructure> structure = std::nullopt);

  std::string name() const override { return name_; }
  void feature(ConstVecRef x, VecRef out) const override;
  void feature_jacobian(ConstVecRef x, MatRef out) const override;
  void drift(double t, ConstVecRef x, ConstVecRef z, VecRef out) const override;
  void drift_dx(double t, ConstVecRef x, ConstVecRef z, MatRef out) const override;
  void drift_dz(double t, ConstVecRef x, ConstVecRef z, MatRef out) const override;
  void sigma_tilde(double t, ConstVecRef z, MatRef out) const override;
  void sigma_tilde_dz(double t, ConstVecRef z, Eigen::Index k, MatRef out) const override;
  std::optional<LinearGaussianForm> linear_form() const override;
  double lipschitz_x() const override;

  const Mat& B() const { return B_; }
  const Mat& C() const { return C_; }
  const Mat& P() const { return P_; }
  double s0() const { return s0_; }
  double kappa() const { return kappa_; }

 private:
  std::string name_;
  Mat B_, C_, P_;
  double s0_, kappa_;
};

// b(x, mu) = -beta x + a tanh(x - m) componentwise, psi(y) = (y, |y|^2),
// sigma_tilde = sqrt(s0^2 + kappa^2 var) I with var the total variance.
class MeanRepelledModel : public MeanFieldModel {
 public:
  MeanRepelledModel(Eigen::Index d, double beta, double a, double lambda, double s0, double kappa);

  std::string name() const override { return "mean-repelled"; }
  void feature(ConstVecRef x, VecRef out) const override;
  void feature_jacobian(ConstVecRef x, MatRef out) const override;
  void drift(double t, ConstVecRef x, ConstVecRef z, VecRef out) const override;
  void drift_dx(double t, ConstVecRef x, ConstVecRef z, MatRef out) const override;
  void drift_dz(double t, ConstVecRef x, ConstVecRef z, MatRef out) const override;
  void sigma_tilde(double t, ConstVecRef z, MatRef out) const override;
  void sigma_tilde_dz(double t, ConstVecRef z, Eigen::Index k, MatRef out) const override;
  double lipschitz_x() const override { return beta_ + a_; }

  double beta() const { return beta_; }
  double a() const { return a_; }

 private:
  double beta_, a_, s0_, kappa_;
};

}  // namespace mvlab
