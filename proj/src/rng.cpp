#include "mvlab/rng.hpp"

namespace mvlab {

namespace {

constexpr std::uint32_t kMaxBlocks = 1u << 24;

double to_unit(std::uint32_t hi, std::uint32_t lo) {
  // 53 random bits mapped to (0, 1].
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

Philox4x32::Block counter(Stream s, std::uint64_t particle, std::uint64_t index, std::uint64_t replica,
                          std::uint32_t block) {
  if (block >= kMaxBlocks) throw ParameterOutOfRange("too many variates for one counter");
  // Replica and particle ids above 2^32 fold their high words into the index word.
  const auto index_word = static_cast<std::uint32_t>(index ^ (particle >> 32) * 0x9E3779B9u ^
                                                     (replica >> 32) * 0x85EBCA6Bu);
  return {static_cast<std::uint32_t>(particle), index_word, static_cast<std::uint32_t>(replica),
          (static_cast<std::uint32_t>(s) << 24) | block};
}

}  // namespace

NoisePlan::NoisePlan(std::uint64_t seed, double h, double horizon, int refine)
    : seed_(seed), h_(h), horizon_(horizon), refine_(refine) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterOutOfRange("noise plan needs h > 0");
  if (!(horizon >= 0.0)) throw ParameterOutOfRange("noise plan needs a nonnegative horizon");
  if (refine < 1) throw ParameterOutOfRange("refine must be >= 1");
  steps_ = std::lround(horizon / h);
  if (std::abs(steps_ * h - horizon) > 1e-9 * std::max(1.0, horizon)) {
    throw ParameterOutOfRange("horizon must be an integer number of steps");
  }
}

NoisePlan NoisePlan::coarsened(int factor) const {
  if (factor < 1) throw ParameterOutOfRange("coarsening factor must be >= 1");
  return NoisePlan(seed_, h_ * factor, horizon_, refine_ * factor);
}

Philox4x32::Key NoisePlan::key() const {
  const std::uint64_t k = splitmix64(seed_);
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void NoisePlan::uniforms(Stream s, std::uint64_t particle, std::uint64_t index, std::uint64_t replica,
                         VecRef out) const {
  const auto k = key();
  const Eigen::Index n = out.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    const auto r = Philox4x32::generate(counter(s, particle, index, replica, static_cast<std::uint32_t>(i / 2)), k);
    out(i) = to_unit(r[0], r[1]);
    if (i + 1 < n) out(i + 1) = to_unit(r[2], r[3]);
  }
}

void NoisePlan::normals(Stream s, std::uint64_t particle, std::uint64_t index, std::uint64_t replica,
                        VecRef out) const {
  const auto k = key();
  const Eigen::Index n = out.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    const auto r = Philox4x32::generate(counter(s, particle, index, replica, static_cast<std::uint32_t>(i / 2)), k);
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out(i) = radius * std::cos(angle);
    if (i + 1 < n) out(i + 1) = radius * std::sin(angle);
  }
}

void NoisePlan::increment(Stream s, std::uint64_t particle, long step, std::uint64_t replica,
                          VecRef out) const {
  const double sub_scale = std::sqrt(h_ / refine_);
  if (refine_ == 1) {
    normals(s, particle, static_cast<std::uint64_t>(step), replica, out);
    out *= sub_scale;
    return;
  }
  Vec z(out.size());
  out.setZero();
  for (int k = 0; k < refine_; ++k) {
    normals(s, particle, static_cast<std::uint64_t>(step) * refine_ + k, replica, z);
    out += z;
  }
  out *= sub_scale;
}

}  // namespace mvlab
