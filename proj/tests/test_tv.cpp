// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <stdexcept>
#include "sntf/updates.hpp"
#include "oracle.hpp"
#include "sntf/tv.hpp"

using namespace sntf;

namespace {
constexpr double kFloor = std::numeric_limits<double>::epsilon();
}

TEST_CASE("tv_seminorm") {
  CHECK(tv_seminorm(std::vector<double>{3.0, 3.0, 3.0, 3.0}) == 0.0);
  CHECK(tv_seminorm(std::vector<double>{0, 1, 0, 1}) == 3.0);
  // monotone vectors telescope to last minus first
  CHECK(tv_seminorm(std::vector<double>{1, 2, 4, 7}) == doctest::Approx(6.0));
  CHECK(tv_seminorm(std::vector<double>{5.0}) == 0.0);
  CHECK_THROWS_AS(tv_seminorm(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("tv_subgradient shapes and pinned values") {
  const auto constant = tv_subgradient(std::vector<double>{2, 2, 2});
  for (double g : constant) CHECK(g == 0.0);

  const auto increasing = tv_subgradient(std::vector<double>{1, 2, 3, 4});
  CHECK(increasing.front() == -1.0);
  CHECK(increasing.back() == 1.0);
  for (std::size_t k = 1; k + 1 < increasing.size(); ++k) {
    CHECK(increasing[k] == 0.0);
  }

  const auto peak = tv_subgradient(std::vector<double>{0, 2, 1});
  CHECK(peak[0] == -1.0);
  CHECK(peak[1] == 2.0);
  CHECK(peak[2] == -1.0);

  for (double g : tv_subgradient(std::vector<double>{0, 2, 1, 1, 5, 0})) {
    CHECK(g >= -2.0);
    CHECK(g <= 2.0);
  }
  CHECK_THROWS_AS(tv_subgradient(std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("tv_subgradient matches finite differences away from ties") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    // consecutive differences forced above 1e-3 in magnitude
    std::vector<double> h(8);
    h[0] = unif(rng);
    for (std::size_t k = 1; k < h.size(); ++k) {
      const double delta = 0.002 + 0.5 * unif(rng);
      h[k] = h[k - 1] + (unif(rng) < 0.5 ? delta : -delta);
    }
    const auto grad = tv_subgradient(h);
    const double step = 1e-7;
    for (std::size_t k = 0; k < h.size(); ++k) {
      auto plus = h;
      auto minus = h;
      plus[k] += step;
      minus[k] -= step;
      const double fd = (tv_seminorm(plus) - tv_seminorm(minus)) / (2 * step);
      CHECK(std::abs(grad[k] - fd) <= 1e-4);
    }
  }
}

TEST_CASE("tv_split") {
  const auto split = tv_split(std::vector<double>{-1, 2, -1});
  CHECK(split.positive_part == std::vector<double>{0, 2, 0});
  CHECK(split.negative_part == std::vector<double>{1, 0, 1});

  const auto zeros = tv_split(std::vector<double>{0, 0});
  CHECK(zeros.positive_part == std::vector<double>{0, 0});
  CHECK(zeros.negative_part == std::vector<double>{0, 0});

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::vector<double> g(10);
  for (double& v : g) v = unif(rng);
  const auto sp = tv_split(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(sp.positive_part[k] - sp.negative_part[k] == g[k]);
    CHECK(sp.positive_part[k] * sp.negative_part[k] == 0.0);
  }
}

TEST_CASE("regularized topic update with lambda 0 equals the plain rule") {
  std::mt19937_64 rng(111);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = testing::random_instance(rng);
    for (std::size_t axis = 1; axis < inst.dataset.ndim(); ++axis) {
      ModelState plain = inst.model;
      ModelState reg = inst.model;
      update_topics_mode(plain, inst.dataset, axis, kFloor);
      update_topics_mode_regularized(reg, inst.dataset, axis, 0.0, kFloor);
      CHECK(plain.topics == reg.topics);  // bit-identical code path
    }
  }
}

TEST_CASE("regularized update is an identity at a doubly-fixed point") {
  // exact fit and constant topic factors: data term multiplier is 1 and the
  // subgradient vanishes
  ModelState m;
  m.topics = {{{0.5, 0.5, 0.5}, {0.25, 0.25}}};
  m.codings = {{{1.0, 2.0}}};
  m.strata_factors = {{}};
  StratifiedDataset data({reconstruct(m, 0)});
  const ModelState before = m;
  update_topics_mode_regularized(m, data, 1, 5.0, kFloor);
  update_topics_mode_regularized(m, data, 2, 5.0, kFloor);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(m.topics[0][0][k] ==
          doctest::Approx(before.topics[0][0][k]).epsilon(1e-12));
  }
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(m.topics[0][1][k] ==
          doctest::Approx(before.topics[0][1][k]).epsilon(1e-12));
  }
}

TEST_CASE("regularized update matches the literal evaluation") {
  std::mt19937_64 rng(222);
  for (int trial = 0; trial < 15; ++trial) {
    auto inst = testing::random_instance(rng);
    for (std::size_t axis = 1; axis < inst.dataset.ndim(); ++axis) {
      ModelState fast = inst.model;
      ModelState slow = inst.model;
      update_topics_mode_regularized(fast, inst.dataset, axis, 5.0, kFloor);
      testing::naive_update_h(slow, inst.dataset, axis, 5.0, kFloor);
      for (std::size_t l = 0; l < fast.topic_rank(); ++l) {
        for (std::size_t k = 0; k < fast.topics[l][axis - 1].size(); ++k) {
          CHECK(fast.topics[l][axis - 1][k] ==
                doctest::Approx(slow.topics[l][axis - 1][k]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("regularization pressure moves entries toward lower TV") {
  // zero data and reconstruction: both contraction terms clip to the floor,
  // so the multiplier is driven by the TV split alone
  DenseTensor zeros({1, 4});
  StratifiedDataset data({zeros});
  ModelState m;
  m.topics = {{{0.1, 0.9, 0.2, 0.7}}};
  m.codings = {{{0.0}}};
  m.strata_factors = {{}};

  const auto grad = tv_subgradient(m.topics[0][0]);
  const auto split = tv_split(grad);
  const FactorVec before = m.topics[0][0];
  update_topics_mode_regularized(m, data, 1, 10.0, kFloor);
  for (std::size_t k = 0; k < before.size(); ++k) {
    const double mult = m.topics[0][0][k] / before[k];
    if (split.positive_part[k] > 0.0) CHECK(mult < 1.0);
    if (split.negative_part[k] > 0.0) CHECK(mult > 1.0);
  }
}

TEST_CASE("normalize_topic") {
  std::vector<double> h{3.0, 4.0};
  const double scale = normalize_topic(h, Norm::L2, kFloor);
  CHECK(scale == doctest::Approx(5.0));
  CHECK(h[0] == doctest::Approx(0.6));
  CHECK(h[1] == doctest::Approx(0.8));

  // already-unit vector: unchanged, scale 1
  std::vector<double> unit{1.0, 0.0};
  CHECK(normalize_topic(unit, Norm::L2, kFloor) == doctest::Approx(1.0));
  CHECK(unit[0] == doctest::Approx(1.0));

  std::vector<double> l1{1.0, 3.0};
  CHECK(normalize_topic(l1, Norm::L1, kFloor) == doctest::Approx(4.0));
  CHECK(l1[0] == doctest::Approx(0.25));

  // degenerate zero vector: clipped to the floor, then normalized
  std::vector<double> zero{0.0, 0.0, 0.0, 0.0};
  normalize_topic(zero, Norm::L2, kFloor);
  for (double v : zero) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("normalize_topics_mode preserves reconstructions") {
  std::mt19937_64 rng(333);
  for (int trial = 0; trial < 8; ++trial) {
    auto inst = testing::random_instance(rng);
    std::vector<DenseTensor> before;
    for (std::size_t i = 0; i < inst.dataset.stratum_count(); ++i) {
      before.push_back(reconstruct(inst.model, i));
    }
    const double obj_before =
        objective(inst.model, inst.dataset);
    for (std::size_t axis = 1; axis < inst.dataset.ndim(); ++axis) {
      normalize_topics_mode(inst.model, axis, Norm::L2, kFloor);
    }
    for (std::size_t i = 0; i < inst.dataset.stratum_count(); ++i) {
      const DenseTensor after = reconstruct(inst.model, i);
      for (std::size_t k = 0; k < after.size(); ++k) {
        CHECK(after[k] == doctest::Approx(before[i][k]).epsilon(1e-12));
      }
    }
    const double obj_after = objective(inst.model, inst.dataset);
    CHECK(obj_after == doctest::Approx(obj_before).epsilon(1e-12));

    for (std::size_t l = 0; l < inst.model.topic_rank(); ++l) {
      for (std::size_t k = 0; k + 1 < inst.dataset.ndim(); ++k) {
        double norm = 0.0;
        for (double v : inst.model.topics[l][k]) norm += v * v;
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}
