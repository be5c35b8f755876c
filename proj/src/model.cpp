#include "mvlab/model.hpp"

#include <cmath>

#include "mvlab/errors.hpp"
#include "mvlab/stats.hpp"

namespace mvlab {

MeanFieldModel::MeanFieldModel(Eigen::Index dim, Eigen::Index noise_dim, Eigen::Index feature_dim, double lambda,
                               std::optional<HamiltonianStructure> structure)
    : dim_(dim), noise_dim_(noise_dim), feature_dim_(feature_dim), lambda_(lambda), structure_(std::move(structure)) {
  if (noise_dim <= 0 || dim < noise_dim || feature_dim < 0) throw SizeMismatch("model dimensions are inconsistent");
  if (!(lambda >= 0.0)) throw ParameterOutOfRange("lambda must be nonnegative");
  if (structure_) {
    if (structure_->degenerate_dim() != dim - noise_dim || structure_->noisy_dim() != noise_dim) {
      throw SizeMismatch("Hamiltonian structure does not match the state split");
    }
  } else if (dim != noise_dim) {
    throw SizeMismatch("a model without structure must have dim == noise_dim");
  }
}

Vec feature_mean(const MeanFieldModel& model, const RowMat& points) {
  const Eigen::Index n = points.rows(), p = model.feature_dim();
  if (points.cols() != model.dim()) throw SizeMismatch("points do not match the model dimension");
  RowMat psi(n, p);
  Vec buf(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    model.feature(points.row(i).transpose(), buf);
    psi.row(i) = buf.transpose();
  }
  return cloud_mean(psi);
}

Vec feature_mean(const MeanFieldModel& model, const EmpiricalMeasure& mu) {
  if (mu.uniform()) return feature_mean(model, mu.points());
  Vec z = Vec::Zero(model.feature_dim());
  Vec buf(model.feature_dim());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    model.feature(mu.points().row(i).transpose(), buf);
    z += mu.weights()(i) * buf;
  }
  return z;
}

Vec drift_at(const MeanFieldModel& model, double t, ConstVecRef x, const EmpiricalMeasure& mu) {
  Vec out(model.noise_dim());
  model.drift(t, x, feature_mean(model, mu), out);
  return out;
}

Mat sigma_tilde_at(const MeanFieldModel& model, double t, const EmpiricalMeasure& mu) {
  Mat out(model.noise_dim(), model.noise_dim());
  model.sigma_tilde(t, feature_mean(model, mu), out);
  return out;
}

Vec grad_x_drift(const MeanFieldModel& model, double t, ConstVecRef x, const EmpiricalMeasure& mu, ConstVecRef v) {
  Mat jac(model.noise_dim(), model.dim());
  model.drift_dx(t, x, feature_mean(model, mu), jac);
  return jac * v;
}

Mat lions_drift(const MeanFieldModel& model, double t, ConstVecRef x, const EmpiricalMeasure& mu, ConstVecRef y) {
  const Vec z = feature_mean(model, mu);
  Mat dz(model.noise_dim(), model.feature_dim());
  model.drift_dz(t, x, z, dz);
  Mat jpsi(model.feature_dim(), model.dim());
  model.feature_jacobian(y, jpsi);
  return dz * jpsi;
}

std::vector<Mat> lions_sigma(const MeanFieldModel& model, double t, const EmpiricalMeasure& mu, ConstVecRef y) {
  const Vec z = feature_mean(model, mu);
  Mat jpsi(model.feature_dim(), model.dim());
  model.feature_jacobian(y, jpsi);
  const Eigen::Index d = model.noise_dim();
  std::vector<Mat> out(static_cast<std::size_t>(model.dim()), Mat::Zero(d, d));
  Mat dk(d, d);
  for (Eigen::Index k = 0; k < model.feature_dim(); ++k) {
    model.sigma_tilde_dz(t, z, k, dk);
    for (Eigen::Index c = 0; c < model.dim(); ++c) out[static_cast<std::size_t>(c)] += jpsi(k, c) * dk;
  }
  return out;
}

Mat sigma_tilde_directional(const MeanFieldModel& model, double t, ConstVecRef z, ConstVecRef g) {
  const Eigen::Index d = model.noise_dim();
  Mat out = Mat::Zero(d, d);
  Mat dk(d, d);
  for (Eigen::Index k = 0; k < model.feature_dim(); ++k) {
    if (g(k) == 0.0) continue;
    model.sigma_tilde_dz(t, z, k, dk);
    out += g(k) * dk;
  }
  return out;
}

LinearFeatureModel::LinearFeatureModel(std::string name, Mat B, Mat C, Mat P, double lambda, double s0,
                                       double kappa, std::optional<HamiltonianStructure> structure)
    : MeanFieldModel(B.cols(), B.rows(), P.rows(), lambda, std::move(structure)),
      name_(std::move(name)),
      B_(std::move(B)),
      C_(std::move(C)),
      P_(std::move(P)),
      s0_(s0),
      kappa_(kappa) {
  if (P_.cols() != dim() || C_.rows() != noise_dim() || C_.cols() != P_.rows()) {
    throw SizeMismatch("linear feature model: B, C, P shapes disagree");
  }
  if (!(s0 >= 0.0) || !(kappa >= 0.0)) throw ParameterOutOfRange("s0 and kappa must be nonnegative");
}

void LinearFeatureModel::feature(ConstVecRef x, VecRef out) const { out.noalias() = P_ * x; }

void LinearFeatureModel::feature_jacobian(ConstVecRef, MatRef out) const { out = P_; }

void LinearFeatureModel::drift(double, ConstVecRef x, ConstVecRef z, VecRef out) const {
  out.noalias() = B_ * x;
  out.noalias() += C_ * z;
}

void LinearFeatureModel::drift_dx(double, ConstVecRef, ConstVecRef, MatRef out) const { out = B_; }

void LinearFeatureModel::drift_dz(double, ConstVecRef, ConstVecRef, MatRef out) const { out = C_; }

void LinearFeatureModel::sigma_tilde(double, ConstVecRef z, MatRef out) const {
  const double s = std::sqrt(s0_ * s0_ + kappa_ * kappa_ * z.squaredNorm());
  out.setIdentity();
  out *= s;
}

void LinearFeatureModel::sigma_tilde_dz(double, ConstVecRef z, Eigen::Index k, MatRef out) const {
  const double s = std::sqrt(s0_ * s0_ + kappa_ * kappa_ * z.squaredNorm());
  out.setIdentity();
  out *= s > 0.0 ? kappa_ * kappa_ * z(k) / s : 0.0;
}

std::optional<LinearGaussianForm> LinearFeatureModel::linear_form() const {
  const Eigen::Index n = dim(), d = noise_dim(), m = n - d;
  LinearGaussianForm form;
  form.B = Mat::Zero(n, n);
  form.C = Mat::Zero(n, n);
  if (const auto& s = structure()) {
    form.B.topLeftCorner(m, m) = s->A;
    form.B.topRightCorner(m, d) = s->M;
  }
  form.B.bottomRows(d) = B_;
  form.C.bottomRows(d) = C_ * P_;
  form.noise_embedding = Mat::Zero(n, d);
  form.noise_embedding.bottomRows(d).setIdentity();
  form.lambda = lambda();
  const Mat P = P_;
  const double s0 = s0_, kappa = kappa_;
  form.noise = [P, s0, kappa, d](const Vec& mean) -> Mat {
    const double s = std::sqrt(s0 * s0 + kappa * kappa * (P * mean).squaredNorm());
    return s * Mat::Identity(d, d);
  };
  return form;
}

double LinearFeatureModel::lipschitz_x() const {
  Eigen::JacobiSVD<Mat> svd(B_);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

MeanRepelledModel::MeanRepelledModel(Eigen::Index d, double beta, double a, double lambda, double s0, double kappa)
    : MeanFieldModel(d, d, d + 1, lambda, std::nullopt), beta_(beta), a_(a), s0_(s0), kappa_(kappa) {}

void MeanRepelledModel::feature(ConstVecRef x, VecRef out) const {
  const Eigen::Index d = dim();
  out.head(d) = x;
  out(d) = x.squaredNorm();
}

void MeanRepelledModel::feature_jacobian(ConstVecRef x, MatRef out) const {
  const Eigen::Index d = dim();
  out.setZero();
  out.topRows(d).setIdentity();
  out.row(d) = 2.0 * x.transpose();
}

void MeanRepelledModel::drift(double, ConstVecRef x, ConstVecRef z, VecRef out) const {
  const Eigen::Index d = dim();
  out = -beta_ * x + a_ * (x - z.head(d)).array().tanh().matrix();
}

void MeanRepelledModel::drift_dx(double, ConstVecRef x, ConstVecRef z, MatRef out) const {
  const Eigen::Index d = dim();
  const Eigen::ArrayXd th = (x - z.head(d)).array().tanh();
  out.setZero();
  out.diagonal() = (-beta_ + a_ * (1.0 - th.square())).matrix();
}

void MeanRepelledModel::drift_dz(double, ConstVecRef x, ConstVecRef z, MatRef out) const {
  const Eigen::Index d = dim();
  const Eigen::ArrayXd th = (x - z.head(d)).array().tanh();
  out.setZero();
  out.leftCols(d).diagonal() = (-a_ * (1.0 - th.square())).matrix();
}

void MeanRepelledModel::sigma_tilde(double, ConstVecRef z, MatRef out) const {
  const Eigen::Index d = dim();
  const double var = std::max(z(d) - z.head(d).squaredNorm(), 0.0);
  out.setIdentity();
  out *= std::sqrt(s0_ * s0_ + kappa_ * kappa_ * var);
}

void MeanRepelledModel::sigma_tilde_dz(double, ConstVecRef z, Eigen::Index k, MatRef out) const {
  const Eigen::Index d = dim();
  const double var = z(d) - z.head(d).squaredNorm();
  const double s = std::sqrt(s0_ * s0_ + kappa_ * kappa_ * std::max(var, 0.0));
  out.setIdentity();
  if (var <= 0.0 || s == 0.0) {
    out.setZero();
    return;
  }
  // d s / d var = kappa^2 / (2 s); d var / d m_k = -2 m_k, d var / d z_d = 1.
  const double dvar = k < d ? -2.0 * z(k) : 1.0;
  out *= kappa_ * kappa_ / (2.0 * s) * dvar;
}

}  // namespace mvlab
