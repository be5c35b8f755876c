#include "mvlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mvlab/assignment.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/rng.hpp"
#include "mvlab/stats.hpp"

namespace mvlab {

EmpiricalMeasure::EmpiricalMeasure(RowMat points) : points_(std::move(points)) {
  if (points_.rows() < 1) throw TooFewParticles("empirical measure needs at least one point");
  weights_ = Vec::Constant(points_.rows(), 1.0 / static_cast<double>(points_.rows()));
}

EmpiricalMeasure::EmpiricalMeasure(RowMat points, Vec weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.rows() < 1) throw TooFewParticles("empirical measure needs at least one point");
  if (weights_.size() != points_.rows()) throw SizeMismatch("one weight per point required");
  if ((weights_.array() < 0.0).any()) throw UnsupportedWeights("weights must be nonnegative");
  if (std::abs(weights_.sum() - 1.0) > 1e-12) throw UnsupportedWeights("weights must sum to 1");
  const double w0 = weights_(0);
  uniform_ = (weights_.array() == w0).all();
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Vec& x, Eigen::Index copies) {
  RowMat pts(copies, x.size());
  for (Eigen::Index i = 0; i < copies; ++i) pts.row(i) = x.transpose();
  return EmpiricalMeasure(std::move(pts));
}

Vec EmpiricalMeasure::mean() const {
  if (uniform_) return cloud_mean(points_);
  return (points_.transpose() * weights_).eval();
}

namespace {

void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.size() != nu.size()) throw SizeMismatch("clouds must have equal particle counts");
  if (mu.dim() != nu.dim()) throw SizeMismatch("clouds must have equal dimension");
  if (!mu.uniform() || !nu.uniform()) throw UnsupportedWeights("only uniform weights are supported");
}

std::vector<int> sorted_order(const RowMat& pts) {
  std::vector<int> idx(static_cast<std::size_t>(pts.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return pts(a, 0) < pts(b, 0); });
  return idx;
}

// Pairing minimising sum_i cost(x_i, y_pairing[i]); cost(x, y) = g(|D(x - y)|).
template <typename Cost>
std::vector<int> optimal_pairing(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Cost&& cost,
                                 bool sortable) {
  const Eigen::Index n = mu.size();
  if (mu.dim() == 1 && sortable) {
    const auto a = sorted_order(mu.points());
    const auto b = sorted_order(nu.points());
    std::vector<int> pairing(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pairing[static_cast<std::size_t>(a[i])] = b[i];
    return pairing;
  }
  if (n > kMaxAssignmentSize) {
    throw SizeMismatch("exact assignment is limited to " + std::to_string(kMaxAssignmentSize) + " points");
  }
  Mat c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = cost(mu.points().row(i), nu.points().row(j));
  }
  return solve_assignment(c);
}

}  // namespace

double wasserstein_k(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double k) {
  if (!(k >= 1.0)) throw ParameterOutOfRange("Wasserstein order must be >= 1");
  check_pair(mu, nu);
  auto cost = [k](const auto& x, const auto& y) { return std::pow((x - y).norm(), k); };
  const auto pairing = optimal_pairing(mu, nu, cost, true);
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) total += cost(mu.points().row(i), nu.points().row(pairing[i]));
  return std::pow(total / static_cast<double>(mu.size()), 1.0 / k);
}

double modified_distance(ConstVecRef x, ConstVecRef y, double t, Eigen::Index m) {
  if (!(t > 0.0)) throw ParameterOutOfRange("modified distance needs t > 0");
  if (x.size() != y.size() || m < 0 || m > x.size()) throw SizeMismatch("modified distance: bad split");
  const double d1 = (x.head(m) - y.head(m)).squaredNorm();
  const double d2 = (x.tail(x.size() - m) - y.tail(y.size() - m)).squaredNorm();
  return std::sqrt(d1 / (t * t) + d2);
}

double wasserstein_2_modified(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double t,
                              Eigen::Index m) {
  if (!(t > 0.0)) throw ParameterOutOfRange("modified distance needs t > 0");
  check_pair(mu, nu);
  if (m < 0 || m > mu.dim()) throw SizeMismatch("modified distance: bad split");
  const double inv_t2 = 1.0 / (t * t);
  auto cost = [&](const auto& x, const auto& y) {
    return inv_t2 * (x.head(m) - y.head(m)).squaredNorm() +
           (x.tail(x.size() - m) - y.tail(y.size() - m)).squaredNorm();
  };
  const auto pairing = optimal_pairing(mu, nu, cost, true);
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) total += cost(mu.points().row(i), nu.points().row(pairing[i]));
  return std::sqrt(total / static_cast<double>(mu.size()));
}

std::vector<int> optimal_initial_coupling(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  check_pair(mu, nu);
  auto cost = [](const auto& x, const auto& y) { return (x - y).squaredNorm(); };
  return optimal_pairing(mu, nu, cost, true);
}

double pairing_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const std::vector<int>& pairing) {
  if (static_cast<Eigen::Index>(pairing.size()) != mu.size()) throw SizeMismatch("pairing length");
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    total += (mu.points().row(i) - nu.points().row(pairing[i])).squaredNorm();
  }
  return total / static_cast<double>(mu.size());
}

double gaussian_kl(const GaussianLaw& p, const GaussianLaw& q) {
  const Eigen::Index n = p.mean.size();
  if (q.mean.size() != n || p.cov.dim() != n || q.cov.dim() != n) throw SizeMismatch("gaussian_kl: dimensions");
  Eigen::LLT<Mat> lq(q.cov.matrix());
  if (lq.info() != Eigen::Success || lq.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
    throw SingularCovariance("q covariance is singular");
  }
  Eigen::LLT<Mat> lp(p.cov.matrix());
  const Mat Lp_diag = lp.matrixL().toDenseMatrix();
  if (lp.info() != Eigen::Success || Lp_diag.diagonal().minCoeff() <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const Mat qinv_p = lq.solve(p.cov.matrix());
  const Vec diff = q.mean - p.mean;
  const double maha = diff.dot(lq.solve(diff));
  const double logdet_q = 2.0 * lq.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_p = 2.0 * Lp_diag.diagonal().array().log().sum();
  const double kl = 0.5 * (qinv_p.trace() - static_cast<double>(n) + maha + logdet_q - logdet_p);
  return std::max(kl, 0.0);
}

double gaussian_w2_squared(const GaussianLaw& p, const GaussianLaw& q) {
  const Eigen::Index n = p.mean.size();
  if (q.mean.size() != n || p.cov.dim() != n || q.cov.dim() != n) throw SizeMismatch("gaussian_w2: dimensions");
  const SymMatrix root_q = psd_sqrt(q.cov);
  const Mat inner = root_q.matrix() * p.cov.matrix() * root_q.matrix();
  const SymMatrix cross = psd_sqrt(SymMatrix(0.5 * (inner + inner.transpose())));
  const double bures = p.cov.matrix().trace() + q.cov.matrix().trace() - 2.0 * cross.matrix().trace();
  return (p.mean - q.mean).squaredNorm() + std::max(bures, 0.0);
}

double gaussian_w2_modified_squared(const GaussianLaw& p, const GaussianLaw& q, double t, Eigen::Index m) {
  if (!(t > 0.0)) throw ParameterOutOfRange("modified distance needs t > 0");
  const Eigen::Index n = p.mean.size();
  if (m < 0 || m > n) throw SizeMismatch("modified distance: bad split");
  Vec s = Vec::Ones(n);
  s.head(m).setConstant(1.0 / t);
  auto scale = [&](const GaussianLaw& g) {
    const Mat c = s.asDiagonal() * g.cov.matrix() * s.asDiagonal();
    return GaussianLaw{s.cwiseProduct(g.mean), SymMatrix(0.5 * (c + c.transpose()))};
  };
  return gaussian_w2_squared(scale(p), scale(q));
}

namespace {

// k-th smallest squared distance from x to rows of pts, skipping row `self`
// and (when skip_coincident) rows within 1e-12 of x.
double kth_distance(const RowMat& pts, const Eigen::RowVectorXd& x, int k, Eigen::Index self, bool skip_coincident,
                    long* skipped, std::vector<double>& best) {
  best.assign(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
  const double coincide = 1e-24;
  for (Eigen::Index j = 0; j < pts.rows(); ++j) {
    if (j == self) continue;
    const double d2 = (pts.row(j) - x).squaredNorm();
    if (skip_coincident && d2 <= coincide) {
      ++*skipped;
      continue;
    }
    if (d2 >= best.back()) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), d2);
    best.insert(pos, d2);
    best.pop_back();
  }
  return std::sqrt(best.back());
}

long jitter_duplicates(RowMat& pts, const NoisePlan& plan, std::uint64_t tag) {
  // Sorting by first coordinate finds exact duplicates quickly in practice.
  const Eigen::Index n = pts.rows();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      if (pts(a, c) != pts(b, c)) return pts(a, c) < pts(b, c);
    }
    return false;
  });
  long count = 0;
  Vec u(pts.cols());
  for (Eigen::Index i = 1; i < n; ++i) {
    const int a = order[i - 1], b = order[i];
    if ((pts.row(a) - pts.row(b)).squaredNorm() <= 1e-24) {
      plan.uniforms(Stream::Jitter, static_cast<std::uint64_t>(b), tag, 0, u);
      pts.row(b) += (1e-10 * (2.0 * u.array() - 1.0)).matrix().transpose();
      ++count;
    }
  }
  return count;
}

}  // namespace

double knn_relative_entropy(const RowMat& sample_p, const RowMat& sample_q, int k_nn, std::uint64_t jitter_seed,
                            KnnDiagnostics* diagnostics, const Execution& exec) {
  if (k_nn < 1) throw ParameterOutOfRange("k_nn must be positive");
  if (sample_p.cols() != sample_q.cols()) throw SizeMismatch("samples must share a dimension");
  const Eigen::Index n = sample_p.rows(), m = sample_q.rows();
  if (n < k_nn + 1 || m < k_nn + 1) throw DegenerateSample("need at least k_nn + 1 points in each sample");
  const double dim = static_cast<double>(sample_p.cols());

  RowMat p = sample_p, q = sample_q;
  const NoisePlan plan(jitter_seed, 1.0, 0.0);
  KnnDiagnostics diag;
  diag.jittered_points += jitter_duplicates(p, plan, 0);
  diag.jittered_points += jitter_duplicates(q, plan, 1);

  std::vector<double> terms(static_cast<std::size_t>(n));
  std::vector<long> skipped(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), exec, [&](std::size_t i) {
    std::vector<double> best;
    const Eigen::RowVectorXd x = p.row(static_cast<Eigen::Index>(i));
    long unused = 0;
    const double rho = kth_distance(p, x, k_nn, static_cast<Eigen::Index>(i), false, &unused, best);
    const double nu = kth_distance(q, x, k_nn, -1, true, &skipped[i], best);
    terms[i] = std::log(nu / rho);
  });
  for (long s : skipped) diag.excluded_coincidences += s;
  if (diagnostics) *diagnostics = diag;
  for (double v : terms) {
    if (!std::isfinite(v)) throw DegenerateSample("nearest-neighbour distance vanished after jitter");
  }
  return dim * pairwise_sum(terms) / static_cast<double>(n) +
         std::log(static_cast<double>(m) / static_cast<double>(n - 1));
}

RowMat gaussian_sample(const GaussianLaw& law, Eigen::Index n, std::uint64_t seed) {
  const Eigen::Index d = law.mean.size();
  if (law.cov.dim() != d) throw SizeMismatch("mean and covariance sizes differ");
  const Mat root = psd_sqrt(law.cov).matrix();
  const NoisePlan plan(seed, 1.0, 1.0);
  RowMat out(n, d);
  Vec z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    plan.normals(Stream::Initial, static_cast<std::uint64_t>(i), 1, 0, z);
    out.row(i) = (law.mean + root * z).transpose();
  }
  return out;
}

GaussianLaw gaussian_fit(const EmpiricalMeasure& mu) {
  const Eigen::Index n = mu.size(), d = mu.dim();
  if (n <= d) throw TooFewParticles("gaussian_fit needs more particles than dimensions");
  if (!mu.uniform()) throw UnsupportedWeights("gaussian_fit expects uniform weights");
  const Vec mean = cloud_mean(mu.points());
  const RowMat centered = mu.points().rowwise() - mean.transpose();
  Mat cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return GaussianLaw{mean, SymMatrix(0.5 * (cov + cov.transpose()))};
}

}  // namespace mvlab
