#include "mvlab/presets.hpp"

#include "mvlab/errors.hpp"

namespace mvlab {

namespace {

// Kinetic preset: damped position block so that a quadratic Lyapunov function
// with a positive (F) margin exists.
Mat kinetic_A() { return (Mat(2, 2) << -0.5, 1.0, 0.0, 0.0).finished(); }
Mat kinetic_M() { return (Mat(2, 1) << 0.0, 1.0).finished(); }
Mat kinetic_K1() { return (Mat(1, 2) << 1.0, 2.0).finished(); }
Mat kinetic_K2() { return (Mat(1, 1) << 2.0).finished(); }

std::vector<PresetInfo> build_catalogue() {
  std::vector<PresetInfo> out;

  PresetInfo ou;
  ou.name = "linear-ou";
  ou.description = "d=2 mean-field OU, b = -beta x + eps mean, sigma~ = sqrt(s0^2 + kappa^2 |mean|^2) I";
  ou.dim = 2;
  ou.noise_dim = 2;
  ou.lambda = 1.0;
  ou.assumption = Dissipativity::E;
  ou.parameters = {{"beta", 1.0}, {"eps", 0.5}, {"s0", 1.0}, {"kappa", 0.3}, {"lambda", 1.0}};
  // 2<b(x,mu) - b(y,nu), x - y> <= -(2 beta - eps)|x - y|^2 + eps W2^2 and
  // ||sigma~(mu) - sigma~(nu)||_HS^2 <= d kappa^2 W2^2.
  ou.theta2 = 2.0 * 1.0 - 0.5;
  ou.theta1 = 0.5 + 2.0 * 0.3 * 0.3;
  out.push_back(ou);

  PresetInfo rep;
  rep.name = "mean-repelled";
  rep.description = "d=2, b = -beta x + a tanh(x - mean), sigma~ = sqrt(s0^2 + kappa^2 var) I";
  rep.dim = 2;
  rep.noise_dim = 2;
  rep.lambda = 1.0;
  rep.assumption = Dissipativity::None;
  rep.parameters = {{"beta", 1.0}, {"a", 0.5}, {"s0", 1.0}, {"kappa", 0.3}, {"lambda", 1.0}};
  out.push_back(rep);

  PresetInfo kin;
  kin.name = "kinetic-langevin";
  kin.description =
      "m=2, d=1: dx1 = (A x1 + M x2) dt with A = [[-0.5,1],[0,0]], M = (0,1)^T; "
      "b = -x1a - 2 x1b - 2 x2 + 0.2 mean(x2), sigma~ = sqrt(1 + 0.04 mean(x2)^2)";
  kin.dim = 3;
  kin.noise_dim = 1;
  kin.lambda = 1.0;
  kin.l = 2;
  kin.assumption = Dissipativity::F;
  kin.parameters = {{"c", 0.2}, {"s0", 1.0}, {"kappa", 0.2}, {"lambda", 1.0}, {"r", 2.25}, {"r0", 0.55}};
  // Largest margins for the Lyapunov weights below are theta2 ~ 0.462 and
  // theta1 ~ 0.086; the stored values are rounded conservatively.
  kin.r = 2.25;
  kin.r0 = 0.55;
  kin.theta2 = 0.45;
  kin.theta1 = 0.09;
  kin.c0 = 0.326;
  out.push_back(kin);
  return out;
}

}  // namespace

double PresetInfo::theoretical_rate() const {
  if (assumption == Dissipativity::F) return c0 * (theta2 - theta1);
  return theta2 - theta1;
}

std::vector<PresetInfo> preset_catalogue() {
  static const std::vector<PresetInfo> catalogue = build_catalogue();
  return catalogue;
}

const PresetInfo& preset_info(const std::string& name) {
  static const std::vector<PresetInfo> catalogue = build_catalogue();
  for (const auto& p : catalogue) {
    if (p.name == name) return p;
  }
  throw ConfigInvalid("preset", "unknown preset '" + name + "'");
}

std::shared_ptr<const LinearFeatureModel> make_linear_ou(Eigen::Index d, double beta, double eps, double lambda,
                                                         double s0, double kappa) {
  return std::make_shared<LinearFeatureModel>("linear-ou", -beta * Mat::Identity(d, d), eps * Mat::Identity(d, d),
                                              Mat::Identity(d, d), lambda, s0, kappa);
}

std::shared_ptr<const LinearFeatureModel> make_kinetic(const Mat& A, const Mat& M, const Mat& K1, const Mat& K2,
                                                       double c, double lambda, double s0, double kappa) {
  const Eigen::Index m = A.rows(), d = M.cols();
  if (K1.rows() != d || K1.cols() != m || K2.rows() != d || K2.cols() != d) {
    throw SizeMismatch("kinetic model: friction blocks have the wrong shape");
  }
  Mat B(d, m + d);
  B << -K1, -K2;
  Mat P = Mat::Zero(d, m + d);
  P.rightCols(d).setIdentity();
  return std::make_shared<LinearFeatureModel>("kinetic-langevin", B, c * Mat::Identity(d, d), P, lambda, s0, kappa,
                                              make_hamiltonian_structure(A, M));
}

std::shared_ptr<const MeanFieldModel> make_preset(const std::string& name) {
  const PresetInfo& info = preset_info(name);
  const auto& p = info.parameters;
  if (name == "linear-ou") {
    return make_linear_ou(2, p.at("beta"), p.at("eps"), p.at("lambda"), p.at("s0"), p.at("kappa"));
  }
  if (name == "mean-repelled") {
    return std::make_shared<MeanRepelledModel>(2, p.at("beta"), p.at("a"), p.at("lambda"), p.at("s0"), p.at("kappa"));
  }
  return make_kinetic(kinetic_A(), kinetic_M(), kinetic_K1(), kinetic_K2(), p.at("c"), p.at("lambda"), p.at("s0"),
                      p.at("kappa"));
}

}  // namespace mvlab
