#include "doctest.h"

#include <cmath>
#include <vector>

#include "mvlab/rng.hpp"
#include "mvlab/stats.hpp"

using namespace mvlab;

TEST_CASE("philox known-answer vectors") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::generate(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("increments are replayable and addressable") {
  const NoisePlan plan(42, 0.01, 1.0);
  Vec a(3), b(3), c(3);
  plan.increment(Stream::W, 7, 11, 0, a);
  plan.increment(Stream::W, 7, 11, 0, b);
  plan.increment(Stream::W, 7, 12, 0, c);
  CHECK(a == b);
  CHECK(a != c);
  plan.increment(Stream::WTilde, 7, 11, 0, c);
  CHECK(a != c);
}

TEST_CASE("increments have variance h") {
  const NoisePlan plan(3, 0.04, 1.0);
  std::vector<double> x, x2;
  Vec v(2);
  for (int i = 0; i < 20000; ++i) {
    plan.increment(Stream::W, static_cast<std::uint64_t>(i), 0, 0, v);
    x.push_back(v(0));
    x2.push_back(v(1) * v(1));
  }
  const auto m = mean_estimate(x);
  const auto q = mean_estimate(x2);
  CHECK(std::abs(m.mean) < 4 * m.std_error);
  CHECK(std::abs(q.mean - 0.04) < 4 * q.std_error);
}

TEST_CASE("coarsened plans sum the fine increments") {
  const NoisePlan fine(5, 0.0025, 0.5);
  const NoisePlan coarse = fine.coarsened(4);
  CHECK(coarse.h() == doctest::Approx(0.01));
  CHECK(coarse.steps() == 50);
  Vec sum = Vec::Zero(2), v(2), c(2);
  for (int k = 0; k < 4; ++k) {
    fine.increment(Stream::W, 1, 8 + k, 0, v);
    sum += v;
  }
  coarse.increment(Stream::W, 1, 2, 0, c);
  CHECK((sum - c).norm() < 1e-14);
}

TEST_CASE("uniforms lie in (0, 1]") {
  const NoisePlan plan(9, 1.0, 0.0);
  Vec u(5);
  for (int i = 0; i < 1000; ++i) {
    plan.uniforms(Stream::Resample, static_cast<std::uint64_t>(i), 0, 0, u);
    CHECK((u.array() > 0.0).all());
    CHECK((u.array() <= 1.0).all());
  }
}
