// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <limits>
#include <stdexcept>

#include "oracle.hpp"
#include "sntf/synth.hpp"
#include "sntf/updates.hpp"

using namespace sntf;

TEST_CASE("generate_planted is exact at zero noise and deterministic") {
  PlantedSpec spec;
  spec.sample_counts = {3, 4, 2};
  spec.trailing_dims = {4, 3};
  spec.topic_rank = 2;
  spec.strata_ranks = {1, 0, 2};
  spec.seed = 12;

  auto a = generate_planted(spec);
  CHECK(objective(a.ground_truth, a.dataset) == 0.0);
  CHECK(a.dataset.stratum_count() == 3);
  CHECK(a.ground_truth.strata_rank(1) == 0);

  auto b = generate_planted(spec);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.dataset.stratum(i) == b.dataset.stratum(i));
  }
  CHECK(a.ground_truth.topics == b.ground_truth.topics);

  spec.seed = 13;
  auto c = generate_planted(spec);
  CHECK(a.dataset.stratum(0) != c.dataset.stratum(0));
}

TEST_CASE("planted noise stays within the amplitude band") {
  PlantedSpec spec;
  spec.sample_counts = {5};
  spec.trailing_dims = {6};
  spec.topic_rank = 1;
  spec.noise_amplitude = 0.25;
  spec.seed = 4;

  auto noisy = generate_planted(spec);
  const DenseTensor clean = reconstruct(noisy.ground_truth, 0);
  const auto& data = noisy.dataset.stratum(0);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double delta = data[k] - clean[k];
    CHECK(delta >= 0.0);
    CHECK(delta <= 0.25);
  }
  CHECK(objective(noisy.ground_truth, noisy.dataset) <=
        0.25 * static_cast<double>(data.size()));
}

TEST_CASE("sparse factor distribution produces zeros") {
  PlantedSpec spec;
  spec.sample_counts = {4};
  spec.trailing_dims = {50};
  spec.topic_rank = 3;
  spec.density = 0.3;
  spec.seed = 6;

  auto inst = generate_planted(spec);
  std::size_t zeros = 0, total = 0;
  for (const auto& tuple : inst.ground_truth.topics) {
    for (const auto& f : tuple) {
      for (double v : f) {
        zeros += v == 0.0;
        ++total;
      }
    }
  }
  CHECK(zeros > total / 3);  // density 0.3 leaves ~70% zeros
  CHECK(zeros < total);
}

TEST_CASE("salt_and_pepper endpoints and determinism") {
  DenseTensor half({10, 10}, std::vector<double>(100, 0.5));

  const DenseTensor untouched = salt_and_pepper(half, 0.0, 1);
  CHECK(untouched == half);

  const DenseTensor a = salt_and_pepper(half, 0.15, 7);
  const DenseTensor b = salt_and_pepper(half, 0.15, 7);
  CHECK(a == b);
  for (double v : a.values()) {
    CHECK((v == 0.0 || v == 1.0 || v == 0.5));
  }

  const DenseTensor extreme = salt_and_pepper(half, 0.5, 7);
  for (double v : extreme.values()) {
    CHECK((v == 0.0 || v == 1.0));
  }

  CHECK_THROWS_AS(salt_and_pepper(half, 0.6, 1), std::invalid_argument);
  DenseTensor out_of_range({1, 2}, {0.5, 1.5});
  CHECK_THROWS_AS(salt_and_pepper(out_of_range, 0.1, 1),
                  std::invalid_argument);
}

TEST_CASE("salt_and_pepper corruption rate calibrates to 2p") {
  DenseTensor half({100, 1000}, std::vector<double>(100000, 0.5));
  const DenseTensor noisy = salt_and_pepper(half, 0.15, 99);
  std::size_t corrupted = 0;
  for (double v : noisy.values()) corrupted += v != 0.5;
  const double fraction = static_cast<double>(corrupted) / 100000.0;
  CHECK(fraction > 0.29);
  CHECK(fraction < 0.31);
}

TEST_CASE("apply_block_watermark") {
  DenseTensor zeros({4, 5});

  // empty region: identity
  const std::vector<IndexRange> empty{{1, 1}, {0, 5}};
  CHECK(apply_block_watermark(zeros, empty, 0.9) == zeros);

  // full region at value 1: all ones
  const std::vector<IndexRange> full{{0, 4}, {0, 5}};
  const DenseTensor ones = apply_block_watermark(zeros, full, 1.0);
  for (double v : ones.values()) CHECK(v == 1.0);

  // top-3-rows overlay marks exactly 3 * width entries
  const std::vector<IndexRange> top{{0, 3}, {0, 5}};
  const DenseTensor marked = apply_block_watermark(zeros, top, 0.8);
  std::size_t touched = 0;
  for (double v : marked.values()) touched += v == 0.8;
  CHECK(touched == 15);

  // max-combine keeps brighter entries
  DenseTensor bright({2, 2}, {0.9, 0.1, 0.9, 0.1});
  const std::vector<IndexRange> all{{0, 2}, {0, 2}};
  const DenseTensor combined = apply_block_watermark(bright, all, 0.5);
  CHECK(combined.values()[0] == 0.9);
  CHECK(combined.values()[1] == 0.5);

  const std::vector<IndexRange> oob{{0, 5}, {0, 5}};
  CHECK_THROWS_AS(apply_block_watermark(zeros, oob, 0.5),
                  std::invalid_argument);
  const std::vector<IndexRange> inverted{{2, 1}, {0, 5}};
  CHECK_THROWS_AS(apply_block_watermark(zeros, inverted, 0.5),
                  std::invalid_argument);
  const std::vector<IndexRange> short_region{{0, 2}};
  CHECK_THROWS_AS(apply_block_watermark(zeros, short_region, 0.5),
                  std::invalid_argument);
}

TEST_CASE("planted ground truth sits at the update fixed point") {
  PlantedSpec spec;
  spec.sample_counts = {3, 2};
  spec.trailing_dims = {3, 2};
  spec.topic_rank = 2;
  spec.strata_ranks = {1, 1};
  spec.seed = 31;
  auto inst = generate_planted(spec);

  ModelState m = inst.ground_truth;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t axis = 1; axis <= 2; ++axis) {
    for (std::size_t i = 0; i < 2; ++i) {
      update_strata_mode(m, inst.dataset, i, axis, eps);
    }
    update_topics_mode(m, inst.dataset, axis, eps);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    update_codings(m, inst.dataset, i, eps);
  }
  for (std::size_t l = 0; l < m.topic_rank(); ++l) {
    for (std::size_t k = 0; k < m.topics[l].size(); ++k) {
      for (std::size_t e = 0; e < m.topics[l][k].size(); ++e) {
        CHECK(m.topics[l][k][e] ==
              doctest::Approx(inst.ground_truth.topics[l][k][e])
                  .epsilon(1e-12));
      }
    }
  }
}
