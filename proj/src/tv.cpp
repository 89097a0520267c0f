// SPDX-License-Identifier: MIT
#include "sntf/tv.hpp"

#include <cmath>
#include <stdexcept>

#include "sntf/updates.hpp"

namespace sntf {

namespace {

double sign(double x) noexcept { return (x > 0.0) - (x < 0.0); }

}  // namespace

double tv_seminorm(std::span<const double> h) {
  if (h.empty()) {
    throw std::invalid_argument("tv_seminorm of an empty vector");
  }
  double tv = 0.0;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    tv += std::abs(h[k + 1] - h[k]);
  }
  return tv;
}

std::vector<double> tv_subgradient(std::span<const double> h) {
  const std::size_t d = h.size();
  if (d < 2) {
    throw std::invalid_argument("tv_subgradient needs at least two entries");
  }
  std::vector<double> g(d);
  g[0] = -sign(h[1] - h[0]);
  for (std::size_t k = 1; k + 1 < d; ++k) {
    g[k] = -sign(h[k + 1] - h[k]) + sign(h[k] - h[k - 1]);
  }
  g[d - 1] = sign(h[d - 1] - h[d - 2]);
  return g;
}

TvSplit tv_split(std::span<const double> g) {
  TvSplit split;
  split.positive_part.resize(g.size());
  split.negative_part.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    split.positive_part[k] = g[k] > 0.0 ? g[k] : 0.0;
    split.negative_part[k] = g[k] < 0.0 ? -g[k] : 0.0;
  }
  return split;
}

void update_topics_mode_regularized(ModelState& model,
                                    const StratifiedDataset& dataset,
                                    std::size_t axis, double lambda,
                                    double clip_floor, std::size_t threads) {
  if (lambda < 0.0) {
    throw std::invalid_argument("regularization strength must be >= 0");
  }
  detail::update_topics_core(model, dataset, axis, lambda, clip_floor,
                             threads);
}

double normalize_topic(std::span<double> h, Norm norm, double clip_floor) {
  if (h.empty()) {
    throw std::invalid_argument("cannot normalize an empty vector");
  }
  auto magnitude = [&]() {
    double m = 0.0;
    if (norm == Norm::L2) {
      for (double v : h) m += v * v;
      return std::sqrt(m);
    }
    for (double v : h) m += std::abs(v);
    return m;
  };

  double scale = magnitude();
  if (scale == 0.0) {
    // Degenerate path: a zero factor is lifted to the clip floor first.
    for (double& v : h) v = clip_floor;
    scale = magnitude();
  }
  for (double& v : h) v /= scale;
  return scale;
}

void normalize_topics_mode(ModelState& model, std::size_t axis, Norm norm,
                           double clip_floor) {
  const std::size_t t_axis = axis - 1;
  for (std::size_t l = 0; l < model.topic_rank(); ++l) {
    const double scale =
        normalize_topic(model.topics[l][t_axis], norm, clip_floor);
    for (auto& coding : model.codings) {
      for (double& w : coding[l]) w *= scale;
    }
  }
}

}  // namespace sntf
