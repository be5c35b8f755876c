#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mvlab/model.hpp"

namespace mvlab {

// Which dissipativity assumption the stored constants refer to.
enum class Dissipativity { None, E, F };

struct PresetInfo {
  std::string name;
  std::string description;
  Eigen::Index dim = 0;
  Eigen::Index noise_dim = 0;
  double lambda = 0.0;
  int l = 0;  // Kalman rank index; 0 for nondegenerate presets
  Dissipativity assumption = Dissipativity::None;
  double theta1 = 0.0;
  double theta2 = 0.0;
  // Lyapunov weights for (F) presets.
  double r = 0.0;
  double r0 = 0.0;
  double c0 = 1.0;
  std::map<std::string, double> parameters;

  // theta2 - theta1 for (E), c0 (theta2 - theta1) for (F).
  double theoretical_rate() const;
};

std::vector<PresetInfo> preset_catalogue();
const PresetInfo& preset_info(const std::string& name);
std::shared_ptr<const MeanFieldModel> make_preset(const std::string& name);

// Linear mean-field OU on R^d: b = -beta x + eps mean(mu),
// sigma_tilde = sqrt(s0^2 + kappa^2 |mean|^2) I.
std::shared_ptr<const LinearFeatureModel> make_linear_ou(Eigen::Index d, double beta, double eps, double lambda,
                                                         double s0, double kappa);

// Kinetic model with position block x1 in R^m and velocity x2 in R^d:
// dx1 = (A x1 + M x2) dt, b = -K1 x1 - K2 x2 + c mean(x2).
std::shared_ptr<const LinearFeatureModel> make_kinetic(const Mat& A, const Mat& M, const Mat& K1, const Mat& K2,
                                                       double c, double lambda, double s0, double kappa);

}  // namespace mvlab
