// SPDX-License-Identifier: MIT
#include "sntf/model.hpp"

#include <stdexcept>
#include <string>

#include "sntf/parallel.hpp"
#include "sntf/rng.hpp"

namespace sntf {

namespace {

std::string shape_string(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (a) s += "x";
    s += std::to_string(shape[a]);
  }
  return s + ")";
}

FactorVec random_vector(std::size_t len, std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  FactorVec v(len);
  for (double& e : v) e = rng.next_unit();
  return v;
}

}  // namespace

StratifiedDataset::StratifiedDataset(std::vector<DenseTensor> strata)
    : strata_(std::move(strata)) {
  if (strata_.empty()) {
    throw std::invalid_argument("dataset needs at least one stratum");
  }
  const auto& first = strata_.front();
  if (first.ndim() < 2) {
    throw std::invalid_argument(
        "stratum tensors need a sample mode plus at least one trailing mode");
  }
  trailing_.assign(first.shape().begin() + 1, first.shape().end());
  for (std::size_t i = 0; i < strata_.size(); ++i) {
    const auto& t = strata_[i];
    if (t.ndim() != first.ndim() ||
        !std::equal(trailing_.begin(), trailing_.end(),
                    t.shape().begin() + 1, t.shape().end())) {
      throw std::invalid_argument(
          "stratum " + std::to_string(i + 1) + " shape " +
          shape_string(t.shape()) + " does not share trailing dims with " +
          "stratum 1 " + shape_string(first.shape()));
    }
    if (!t.non_negative()) {
      throw std::invalid_argument("stratum " + std::to_string(i + 1) +
                                  " contains negative entries");
    }
    total_sq_norm_ += t.sq_norm();
  }
}

const DenseTensor& StratifiedDataset::stratum(std::size_t i) const {
  if (i >= strata_.size()) {
    throw std::invalid_argument("stratum index " + std::to_string(i) +
                                " out of range (s=" +
                                std::to_string(strata_.size()) + ")");
  }
  return strata_[i];
}

std::size_t StratifiedDataset::sample_count(std::size_t i) const {
  return stratum(i).dim(0);
}

std::size_t StratifiedDataset::total_entries() const noexcept {
  std::size_t n = 0;
  for (const auto& t : strata_) n += t.size();
  return n;
}

std::vector<std::size_t> ModelState::trailing_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(topics.front().size());
  for (const auto& f : topics.front()) dims.push_back(f.size());
  return dims;
}

void ModelState::validate_against(const StratifiedDataset& dataset) const {
  const std::size_t s = dataset.stratum_count();
  const auto trailing = dataset.trailing_dims();
  if (topics.empty()) {
    throw std::invalid_argument("model needs topic rank >= 1");
  }
  if (codings.size() != s || strata_factors.size() != s) {
    throw std::invalid_argument("model stratum count " +
                                std::to_string(codings.size()) +
                                " does not match dataset s=" +
                                std::to_string(s));
  }
  const std::size_t r = topics.size();
  for (const auto& tuple : topics) {
    if (tuple.size() != trailing.size()) {
      throw std::invalid_argument("topic tuple mode count mismatch");
    }
    for (std::size_t k = 0; k < trailing.size(); ++k) {
      if (tuple[k].size() != trailing[k]) {
        throw std::invalid_argument("topic factor length mismatch on axis " +
                                    std::to_string(k + 1));
      }
    }
  }
  for (std::size_t i = 0; i < s; ++i) {
    if (codings[i].size() != r) {
      throw std::invalid_argument("stratum " + std::to_string(i + 1) +
                                  " has " + std::to_string(codings[i].size()) +
                                  " coding vectors, expected r=" +
                                  std::to_string(r));
    }
    for (const auto& w : codings[i]) {
      if (w.size() != dataset.sample_count(i)) {
        throw std::invalid_argument("coding length mismatch in stratum " +
                                    std::to_string(i + 1));
      }
    }
    for (const auto& tuple : strata_factors[i]) {
      if (tuple.size() != trailing.size()) {
        throw std::invalid_argument("strata factor mode count mismatch");
      }
      for (std::size_t k = 0; k < trailing.size(); ++k) {
        if (tuple[k].size() != trailing[k]) {
          throw std::invalid_argument(
              "strata factor length mismatch in stratum " +
              std::to_string(i + 1) + " axis " + std::to_string(k + 1));
        }
      }
    }
  }
}

void FitConfig::validate() const {
  if (topic_rank == 0) throw std::invalid_argument("topic rank must be >= 1");
  if (outer_iterations == 0) {
    throw std::invalid_argument("iteration count must be >= 1");
  }
  if (strata_sweeps == 0) {
    throw std::invalid_argument("strata sweep count must be >= 1");
  }
  if (reg_strength < 0.0) {
    throw std::invalid_argument("regularization strength must be >= 0");
  }
  if (!(clip_floor > 0.0)) {
    throw std::invalid_argument("clip floor must be positive");
  }
  if (early_stop.enabled) {
    if (early_stop.rel_tol < 0.0) {
      throw std::invalid_argument("early-stop tolerance must be >= 0");
    }
    if (early_stop.patience == 0) {
      throw std::invalid_argument("early-stop patience must be >= 1");
    }
  }
}

std::vector<std::size_t> resolve_strata_ranks(
    const std::vector<std::size_t>& ranks, std::size_t stratum_count) {
  if (ranks.empty()) return std::vector<std::size_t>(stratum_count, 0);
  if (ranks.size() == 1) {
    return std::vector<std::size_t>(stratum_count, ranks.front());
  }
  if (ranks.size() != stratum_count) {
    throw std::invalid_argument(
        "strata rank list has " + std::to_string(ranks.size()) +
        " entries for " + std::to_string(stratum_count) + " strata");
  }
  return ranks;
}

ModelState init_model(const StratifiedDataset& dataset,
                      const FitConfig& config) {
  config.validate();
  const std::size_t s = dataset.stratum_count();
  const auto trailing = dataset.trailing_dims();
  const auto ranks = resolve_strata_ranks(config.strata_ranks, s);

  ModelState m;
  m.strata_factors.resize(s);
  m.codings.resize(s);
  m.topics.resize(config.topic_rank);

  for (std::size_t i = 0; i < s; ++i) {
    m.strata_factors[i].resize(ranks[i]);
    for (std::size_t j = 0; j < ranks[i]; ++j) {
      m.strata_factors[i][j].resize(trailing.size());
      for (std::size_t k = 0; k < trailing.size(); ++k) {
        m.strata_factors[i][j][k] = random_vector(
            trailing[k], substream_seed(config.seed, kStreamStrataFactor,
                                        i + 1, j + 1, k + 1));
      }
    }
    m.codings[i].resize(config.topic_rank);
    for (std::size_t j = 0; j < config.topic_rank; ++j) {
      m.codings[i][j] = random_vector(
          dataset.sample_count(i),
          substream_seed(config.seed, kStreamCoding, i + 1, j + 1));
    }
  }
  for (std::size_t j = 0; j < config.topic_rank; ++j) {
    m.topics[j].resize(trailing.size());
    for (std::size_t k = 0; k < trailing.size(); ++k) {
      m.topics[j][k] = random_vector(
          trailing[k],
          substream_seed(config.seed, kStreamTopic, 0, j + 1, k + 1));
    }
  }
  return m;
}

DenseTensor strata_tensor(const ModelState& model, std::size_t i) {
  if (i >= model.stratum_count()) {
    throw std::invalid_argument("stratum index out of range");
  }
  const auto& tuples = model.strata_factors[i];
  if (tuples.empty()) {
    return DenseTensor(model.trailing_dims());
  }
  return rank_one_sum(tuples);
}

DenseTensor reconstruct(const ModelState& model, std::size_t i) {
  if (i >= model.stratum_count()) {
    throw std::invalid_argument("stratum index out of range");
  }
  const std::size_t d1 = model.sample_count(i);
  const auto trailing = model.trailing_dims();

  std::vector<std::size_t> shape;
  shape.reserve(trailing.size() + 1);
  shape.push_back(d1);
  shape.insert(shape.end(), trailing.begin(), trailing.end());
  DenseTensor out(std::move(shape));
  const std::size_t slice = out.size() / d1;
  double* data = out.values().data();

  for (std::size_t l = 0; l < model.topic_rank(); ++l) {
    const DenseTensor topic = outer_product(model.topics[l]);
    const double* src = topic.values().data();
    const auto& w = model.codings[i][l];
    for (std::size_t j = 0; j < d1; ++j) {
      double* row = data + j * slice;
      const double c = w[j];
      for (std::size_t t = 0; t < slice; ++t) row[t] += c * src[t];
    }
  }

  if (!model.strata_factors[i].empty()) {
    const DenseTensor features = strata_tensor(model, i);
    const double* src = features.values().data();
    for (std::size_t j = 0; j < d1; ++j) {
      double* row = data + j * slice;
      for (std::size_t t = 0; t < slice; ++t) row[t] += src[t];
    }
  }
  return out;
}

double objective(const ModelState& model, const StratifiedDataset& dataset,
                 std::size_t threads) {
  model.validate_against(dataset);
  const std::size_t s = dataset.stratum_count();
  std::vector<double> partial(s, 0.0);
  parallel_for(s, threads, [&](std::size_t i) {
    partial[i] = sq_frobenius_distance(dataset.stratum(i),
                                       reconstruct(model, i));
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

std::uint64_t param_count(std::span<const std::size_t> sample_counts,
                          std::span<const std::size_t> trailing_dims,
                          std::size_t topic_rank,
                          std::span<const std::size_t> strata_ranks) {
  if (topic_rank == 0) throw std::invalid_argument("topic rank must be >= 1");
  if (sample_counts.size() != strata_ranks.size()) {
    throw std::invalid_argument(
        "need one strata rank per stratum in param_count");
  }
  std::uint64_t trailing_sum = 0;
  for (std::size_t d : trailing_dims) trailing_sum += d;

  std::uint64_t total = 0;
  for (std::size_t d1 : sample_counts) {
    total += static_cast<std::uint64_t>(topic_rank) * d1;
  }
  for (std::size_t rp : strata_ranks) {
    total += static_cast<std::uint64_t>(rp) * trailing_sum;
  }
  total += static_cast<std::uint64_t>(topic_rank) * trailing_sum;
  return total;
}

}  // namespace sntf
