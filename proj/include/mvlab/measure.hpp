#pragma once

#include <cstdint>
#include <vector>

#include "mvlab/linalg.hpp"
#include "mvlab/parallel.hpp"
#include "mvlab/types.hpp"

namespace mvlab {

// Largest cloud handled by the exact assignment solver (1-D inputs excepted).
inline constexpr Eigen::Index kMaxAssignmentSize = 512;

// Weighted point cloud; one point per row.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(RowMat points);
  EmpiricalMeasure(RowMat points, Vec weights);

  static EmpiricalMeasure dirac(const Vec& x, Eigen::Index copies = 1);

  const RowMat& points() const { return points_; }
  const Vec& weights() const { return weights_; }
  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  bool uniform() const { return uniform_; }
  Vec mean() const;

 private:
  RowMat points_;
  Vec weights_;
  bool uniform_ = true;
};

struct GaussianLaw {
  Vec mean;
  SymMatrix cov;
};

double wasserstein_k(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double k);

// rho_t(x, y) = sqrt(t^-2 |x1 - y1|^2 + |x2 - y2|^2) with x1 the first m coordinates.
double modified_distance(ConstVecRef x, ConstVecRef y, double t, Eigen::Index m);

double wasserstein_2_modified(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double t,
                              Eigen::Index m);

// pairing[i] is the index in nu matched with point i of mu under the squared
// Euclidean cost.
std::vector<int> optimal_initial_coupling(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Mean squared distance of a pairing.
double pairing_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const std::vector<int>& pairing);

// KL(p | q). Infinite when p is singular and q is not.
double gaussian_kl(const GaussianLaw& p, const GaussianLaw& q);

// Closed-form W2^2 between Gaussians.
double gaussian_w2_squared(const GaussianLaw& p, const GaussianLaw& q);

// W_{2,t}^2 between Gaussians: the plain distance after scaling the first m
// coordinates by 1/t.
double gaussian_w2_modified_squared(const GaussianLaw& p, const GaussianLaw& q, double t, Eigen::Index m);

struct KnnDiagnostics {
  long jittered_points = 0;
  long excluded_coincidences = 0;
};

// k-nearest-neighbour estimate of Ent(P | Q) from samples (one point per row).
// Duplicates inside a sample are separated by a seeded 1e-10 jitter; a Q point
// coinciding with the query point is skipped in the Q-neighbour search.
double knn_relative_entropy(const RowMat& sample_p, const RowMat& sample_q, int k_nn,
                            std::uint64_t jitter_seed = 0, KnnDiagnostics* diagnostics = nullptr,
                            const Execution& exec = {});

// n draws from `law`, a pure function of the seed (one point per row).
RowMat gaussian_sample(const GaussianLaw& law, Eigen::Index n, std::uint64_t seed);

// Sample mean and unbiased covariance.
GaussianLaw gaussian_fit(const EmpiricalMeasure& mu);

}  // namespace mvlab
