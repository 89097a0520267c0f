// SPDX-License-Identifier: MIT
#include "sntf/updates.hpp"

#include <stdexcept>
#include <string>

#include "sntf/parallel.hpp"
#include "sntf/tv.hpp"

namespace sntf {

namespace {

double clipped(double v, double floor) { return v > floor ? v : floor; }

void check_axis(std::size_t axis, std::size_t ndim) {
  if (axis < 1 || axis >= ndim) {
    throw std::invalid_argument("axis " + std::to_string(axis) +
                                " is not a trailing axis of a " +
                                std::to_string(ndim) + "-mode tensor");
  }
}

// Collapses the sample mode with weight 1, leaving a trailing-dims tensor.
// Shared prefix of the strata-feature numerator and denominator, which do
// not weight the sample mode.
DenseTensor sum_first_axis(const DenseTensor& x) {
  std::vector<std::size_t> shape(x.shape().begin() + 1, x.shape().end());
  DenseTensor out(std::move(shape));
  const std::size_t d1 = x.dim(0);
  const std::size_t slice = out.size();
  const double* src = x.values().data();
  double* dst = out.values().data();
  for (std::size_t j = 0; j < d1; ++j) {
    const double* row = src + j * slice;
    for (std::size_t t = 0; t < slice; ++t) dst[t] += row[t];
  }
  return out;
}

}  // namespace

void update_strata_mode(ModelState& model, const StratifiedDataset& dataset,
                        std::size_t stratum, std::size_t axis,
                        double clip_floor) {
  check_axis(axis, dataset.ndim());
  const std::size_t rp = model.strata_rank(stratum);
  if (rp == 0) return;

  const DenseTensor& data = dataset.stratum(stratum);
  const DenseTensor recon = reconstruct(model, stratum);
  const DenseTensor data_sum = sum_first_axis(data);
  const DenseTensor recon_sum = sum_first_axis(recon);
  const std::size_t t_axis = axis - 1;
  const std::size_t n_trailing = dataset.ndim() - 1;

  for (std::size_t l = 0; l < rp; ++l) {
    const auto& tuple = model.strata_factors[stratum][l];
    std::vector<std::span<const double>> weights(n_trailing);
    for (std::size_t k = 0; k < n_trailing; ++k) {
      if (k != t_axis) weights[k] = tuple[k];
    }
    const auto numer = contract_leaving_mode(data_sum, weights, t_axis);
    const auto denom = contract_leaving_mode(recon_sum, weights, t_axis);
    auto& v = model.strata_factors[stratum][l][t_axis];
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] *= clipped(numer[k], clip_floor) / clipped(denom[k], clip_floor);
    }
  }
}

void update_codings(ModelState& model, const StratifiedDataset& dataset,
                    std::size_t stratum, double clip_floor) {
  const DenseTensor& data = dataset.stratum(stratum);
  const DenseTensor recon = reconstruct(model, stratum);
  const std::size_t n_trailing = dataset.ndim() - 1;

  for (std::size_t l = 0; l < model.topic_rank(); ++l) {
    std::vector<std::span<const double>> weights(n_trailing);
    for (std::size_t k = 0; k < n_trailing; ++k) {
      weights[k] = model.topics[l][k];
    }
    const auto numer = contract_leaving_first(data, weights);
    const auto denom = contract_leaving_first(recon, weights);
    auto& w = model.codings[stratum][l];
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] *= clipped(numer[k], clip_floor) / clipped(denom[k], clip_floor);
    }
  }
}

void update_topics_mode(ModelState& model, const StratifiedDataset& dataset,
                        std::size_t axis, double clip_floor,
                        std::size_t threads) {
  detail::update_topics_core(model, dataset, axis, 0.0, clip_floor, threads);
}

namespace detail {

void update_topics_core(ModelState& model, const StratifiedDataset& dataset,
                        std::size_t axis, double lambda, double clip_floor,
                        std::size_t threads) {
  check_axis(axis, dataset.ndim());
  const std::size_t s = dataset.stratum_count();
  const std::size_t r = model.topic_rank();
  const std::size_t t_axis = axis - 1;
  const std::size_t d = model.topics.front()[t_axis].size();
  const std::size_t ndim = dataset.ndim();

  // Per-stratum partial contractions, computed independently and summed in
  // ascending stratum order for bit-reproducibility.
  std::vector<std::vector<std::vector<double>>> num_part(s), den_part(s);
  parallel_for(s, threads, [&](std::size_t i) {
    const DenseTensor& data = dataset.stratum(i);
    const DenseTensor recon = reconstruct(model, i);
    num_part[i].resize(r);
    den_part[i].resize(r);
    for (std::size_t l = 0; l < r; ++l) {
      std::vector<std::span<const double>> weights(ndim);
      weights[0] = model.codings[i][l];
      for (std::size_t k = 0; k < ndim - 1; ++k) {
        if (k != t_axis) weights[k + 1] = model.topics[l][k];
      }
      num_part[i][l] = contract_leaving_mode(data, weights, axis);
      den_part[i][l] = contract_leaving_mode(recon, weights, axis);
    }
  });

  std::vector<std::vector<double>> numer(r, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> denom(r, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t l = 0; l < r; ++l) {
      for (std::size_t k = 0; k < d; ++k) {
        numer[l][k] += num_part[i][l][k];
        denom[l][k] += den_part[i][l][k];
      }
    }
  }

  // TV of a single-entry factor is identically zero, so such axes carry no
  // regularization term.
  if (lambda > 0.0 && d >= 2) {
    for (std::size_t l = 0; l < r; ++l) {
      const auto grad = tv_subgradient(model.topics[l][t_axis]);
      const TvSplit split = tv_split(grad);
      for (std::size_t k = 0; k < d; ++k) {
        numer[l][k] += lambda * split.negative_part[k];
        denom[l][k] += lambda * split.positive_part[k];
      }
    }
  }

  for (std::size_t l = 0; l < r; ++l) {
    auto& h = model.topics[l][t_axis];
    for (std::size_t k = 0; k < d; ++k) {
      h[k] *=
          clipped(numer[l][k], clip_floor) / clipped(denom[l][k], clip_floor);
    }
  }
}

}  // namespace detail

}  // namespace sntf
