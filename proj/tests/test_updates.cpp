// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <stdexcept>
#include "oracle.hpp"
#include "sntf/updates.hpp"

using namespace sntf;

namespace {

constexpr double kFloor = std::numeric_limits<double>::epsilon();

StratifiedDataset exact_dataset(const ModelState& model) {
  std::vector<DenseTensor> strata;
  for (std::size_t i = 0; i < model.stratum_count(); ++i) {
    strata.push_back(reconstruct(model, i));
  }
  return StratifiedDataset(std::move(strata));
}

void check_factors_close(const ModelState& a, const ModelState& b,
                         double tol) {
  REQUIRE(a.topics.size() == b.topics.size());
  for (std::size_t l = 0; l < a.topics.size(); ++l) {
    for (std::size_t k = 0; k < a.topics[l].size(); ++k) {
      REQUIRE(a.topics[l][k].size() == b.topics[l][k].size());
      for (std::size_t e = 0; e < a.topics[l][k].size(); ++e) {
        CHECK(a.topics[l][k][e] ==
              doctest::Approx(b.topics[l][k][e]).epsilon(tol));
      }
    }
  }
  for (std::size_t i = 0; i < a.codings.size(); ++i) {
    for (std::size_t l = 0; l < a.codings[i].size(); ++l) {
      for (std::size_t e = 0; e < a.codings[i][l].size(); ++e) {
        CHECK(a.codings[i][l][e] ==
              doctest::Approx(b.codings[i][l][e]).epsilon(tol));
      }
    }
    for (std::size_t l = 0; l < a.strata_factors[i].size(); ++l) {
      for (std::size_t k = 0; k < a.strata_factors[i][l].size(); ++k) {
        for (std::size_t e = 0; e < a.strata_factors[i][l][k].size(); ++e) {
          CHECK(a.strata_factors[i][l][k][e] ==
                doctest::Approx(b.strata_factors[i][l][k][e]).epsilon(tol));
        }
      }
    }
  }
}

}  // namespace

TEST_CASE("updates are identities at an exact fit") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 8; ++trial) {
    auto inst = testing::random_instance(rng);
    const StratifiedDataset data = exact_dataset(inst.model);
    const ModelState before = inst.model;

    for (std::size_t axis = 1; axis < data.ndim(); ++axis) {
      for (std::size_t i = 0; i < data.stratum_count(); ++i) {
        update_strata_mode(inst.model, data, i, axis, kFloor);
      }
    }
    for (std::size_t i = 0; i < data.stratum_count(); ++i) {
      update_codings(inst.model, data, i, kFloor);
    }
    for (std::size_t axis = 1; axis < data.ndim(); ++axis) {
      update_topics_mode(inst.model, data, axis, kFloor);
    }
    check_factors_close(inst.model, before, 1e-12);
  }
}

TEST_CASE("strata update shrinks entries against all-zero data") {
  DenseTensor zeros({2, 3});
  StratifiedDataset data({zeros});
  std::mt19937_64 rng(5);
  ModelState m = testing::random_model(rng, data, 1, {1}, 0.5, 1.0);
  const FactorVec before = m.strata_factors[0][0][0];
  update_strata_mode(m, data, 0, 1, kFloor);
  for (std::size_t k = 0; k < before.size(); ++k) {
    // numerator clips to the floor: entries collapse toward zero
    CHECK(m.strata_factors[0][0][0][k] < before[k]);
    CHECK(m.strata_factors[0][0][0][k] >= 0.0);
  }
}

TEST_CASE("strata update is a no-op at rank zero and validates the axis") {
  std::mt19937_64 rng(6);
  DenseTensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  StratifiedDataset data({a});
  ModelState m = testing::random_model(rng, data, 1, {0});
  const ModelState before = m;
  update_strata_mode(m, data, 0, 1, kFloor);
  CHECK(m.topics == before.topics);
  CHECK(m.codings == before.codings);
  CHECK_THROWS_AS(update_strata_mode(m, data, 0, 2, kFloor),
                  std::invalid_argument);
  CHECK_THROWS_AS(update_strata_mode(m, data, 0, 0, kFloor),
                  std::invalid_argument);
}

TEST_CASE("coding update with all-one topics compares slice sums") {
  DenseTensor a({2, 2}, {1, 2, 3, 4});
  StratifiedDataset data({a});
  ModelState m;
  m.topics = {{{1.0, 1.0}}};
  m.codings = {{{1.0, 1.0}}};
  m.strata_factors = {{}};
  // reconstruction rows are [1,1] and [1,1]: row sums 2 and 2
  update_codings(m, data, 0, kFloor);
  CHECK(m.codings[0][0][0] == doctest::Approx(3.0 / 2.0));
  CHECK(m.codings[0][0][1] == doctest::Approx(7.0 / 2.0));
}

TEST_CASE("all updates match the literal enumeration oracle") {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testing::random_instance(rng);
    const auto& data = inst.dataset;

    for (std::size_t axis = 1; axis < data.ndim(); ++axis) {
      for (std::size_t i = 0; i < data.stratum_count(); ++i) {
        ModelState fast = inst.model;
        ModelState slow = inst.model;
        update_strata_mode(fast, data, i, axis, kFloor);
        testing::naive_update_v(slow, data, i, axis, kFloor);
        check_factors_close(fast, slow, 1e-12);
      }
    }
    for (std::size_t i = 0; i < data.stratum_count(); ++i) {
      ModelState fast = inst.model;
      ModelState slow = inst.model;
      update_codings(fast, data, i, kFloor);
      testing::naive_update_w(slow, data, i, kFloor);
      check_factors_close(fast, slow, 1e-12);
    }
    for (std::size_t axis = 1; axis < data.ndim(); ++axis) {
      ModelState fast = inst.model;
      ModelState slow = inst.model;
      update_topics_mode(fast, data, axis, kFloor);
      testing::naive_update_h(slow, data, axis, 0.0, kFloor);
      check_factors_close(fast, slow, 1e-12);
    }
  }
}

TEST_CASE("updates preserve non-negativity") {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = testing::random_instance(rng);
    const auto& data = inst.dataset;
    for (std::size_t axis = 1; axis < data.ndim(); ++axis) {
      for (std::size_t i = 0; i < data.stratum_count(); ++i) {
        update_strata_mode(inst.model, data, i, axis, kFloor);
      }
      update_topics_mode(inst.model, data, axis, kFloor);
    }
    for (std::size_t i = 0; i < data.stratum_count(); ++i) {
      update_codings(inst.model, data, i, kFloor);
    }
    for (const auto& tuple : inst.model.topics) {
      for (const auto& f : tuple) {
        for (double v : f) CHECK(v >= 0.0);
      }
    }
    for (const auto& coding : inst.model.codings) {
      for (const auto& w : coding) {
        for (double v : w) CHECK(v >= 0.0);
      }
    }
  }
}

TEST_CASE("topic update at n=2, s=1, feature rank 0 is the classical H rule") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  DenseTensor a({3, 4});
  for (double& v : a.values()) v = unif(rng);
  StratifiedDataset data({a});
  ModelState m = testing::random_model(rng, data, 2, {0});

  // directly coded matrix formula: H[l][k] *= (W^T A)[l][k] / (W^T W H)[l][k]
  std::vector<std::vector<double>> expect(2, std::vector<double>(4));
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t k = 0; k < 4; ++k) {
      double numer = 0.0, denom = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        double recon = 0.0;
        for (std::size_t q = 0; q < 2; ++q) {
          recon += m.codings[0][q][j] * m.topics[q][0][k];
        }
        numer += m.codings[0][l][j] * a[j * 4 + k];
        denom += m.codings[0][l][j] * recon;
      }
      expect[l][k] = m.topics[l][0][k] * numer / denom;
    }
  }
  update_topics_mode(m, data, 1, kFloor);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(m.topics[l][0][k] ==
            doctest::Approx(expect[l][k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("multiplier direction agrees with the finite-difference gradient") {
  std::mt19937_64 rng(505);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = testing::random_instance(rng, 3, /*with_zeros=*/false);
    const auto& data = inst.dataset;

    // topic update on the first trailing axis
    ModelState updated = inst.model;
    update_topics_mode(updated, data, 1, kFloor);
    for (std::size_t l = 0; l < inst.model.topic_rank(); ++l) {
      for (std::size_t k = 0; k < inst.model.topics[l][0].size(); ++k) {
        const double old_v = inst.model.topics[l][0][k];
        const double mult = updated.topics[l][0][k] / old_v;

        const double step = 1e-6;
        ModelState plus = inst.model;
        ModelState minus = inst.model;
        plus.topics[l][0][k] += step;
        minus.topics[l][0][k] -= step;
        const double grad = (testing::naive_objective(plus, data) -
                             testing::naive_objective(minus, data)) /
                            (2.0 * step);
        if (std::abs(grad) > 1e-4) {
          CHECK((mult - 1.0) * (-grad) >= 0.0);
        }
      }
    }
  }
}
