// SPDX-License-Identifier: MIT
#include "sntf/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "sntf/parallel.hpp"
#include "sntf/tv.hpp"
#include "sntf/updates.hpp"

namespace sntf {

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::MaxIterations:
      return "max-iterations";
    case Termination::Tolerance:
      return "tolerance";
    case Termination::UserAbort:
      return "user-abort";
  }
  return "unknown";
}

bool early_stop_check(const LossTrace& trace, double rel_tol,
                      std::size_t patience) {
  if (rel_tol < 0.0) {
    throw std::invalid_argument("early-stop tolerance must be >= 0");
  }
  if (patience == 0 || trace.size() <= patience) return false;
  const double before = trace[trace.size() - 1 - patience].objective;
  const double now = trace.back().objective;
  const double improvement =
      before > 0.0 ? (before - now) / before : (before - now);
  return improvement < rel_tol;
}

FitResult fit_from(const StratifiedDataset& dataset, const FitConfig& config,
                   ModelState initial, const ProgressSink& sink,
                   std::size_t threads, const PhaseObserver& observer) {
  config.validate();
  initial.validate_against(dataset);
  const std::size_t ndim = dataset.ndim();

  std::vector<std::size_t> reg_axes;
  if (config.regularized_axes.has_value()) {
    reg_axes = *config.regularized_axes;
    for (std::size_t axis : reg_axes) {
      if (axis < 1 || axis >= ndim) {
        throw std::invalid_argument("regularized axis " +
                                    std::to_string(axis) +
                                    " is not a trailing axis");
      }
    }
  } else {
    for (std::size_t axis = 1; axis < ndim; ++axis) reg_axes.push_back(axis);
  }
  const bool regularize = config.reg_strength > 0.0;
  if (regularize && reg_axes.empty()) {
    throw std::invalid_argument(
        "positive regularization strength needs at least one regularized "
        "mode");
  }
  auto is_regularized = [&](std::size_t axis) {
    return regularize &&
           std::find(reg_axes.begin(), reg_axes.end(), axis) != reg_axes.end();
  };

  FitResult result;
  result.model = std::move(initial);
  result.config = config;
  result.termination = Termination::MaxIterations;
  ModelState& model = result.model;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  auto record = [&](std::size_t iteration) {
    const double loss = objective(model, dataset, threads);
    if (!std::isfinite(loss)) {
      throw NumericAbort("objective became non-finite at iteration " +
                             std::to_string(iteration),
                         model, iteration);
    }
    result.trace.push_back({iteration, loss, elapsed()});
    return loss;
  };

  double loss = record(0);
  if (sink && !sink(0, loss, result.trace.back().seconds)) {
    result.termination = Termination::UserAbort;
    return result;
  }

  const std::size_t s = dataset.stratum_count();
  for (std::size_t it = 1; it <= config.outer_iterations; ++it) {
    for (std::size_t sweep = 1; sweep <= config.strata_sweeps; ++sweep) {
      for (std::size_t axis = 1; axis < ndim; ++axis) {
        if (observer) {
          observer({Phase::StrataUpdate, it, sweep, axis});
        }
        parallel_for(s, threads, [&](std::size_t i) {
          update_strata_mode(model, dataset, i, axis, config.clip_floor);
        });
      }
    }

    if (observer) observer({Phase::CodingUpdate, it, 0, 0});
    parallel_for(s, threads, [&](std::size_t i) {
      update_codings(model, dataset, i, config.clip_floor);
    });

    for (std::size_t axis = 1; axis < ndim; ++axis) {
      if (is_regularized(axis)) {
        if (observer) observer({Phase::TopicUpdateRegularized, it, 0, axis});
        update_topics_mode_regularized(model, dataset, axis,
                                       config.reg_strength, config.clip_floor,
                                       threads);
        if (observer) observer({Phase::Normalize, it, 0, axis});
        normalize_topics_mode(model, axis, config.normalization,
                              config.clip_floor);
      } else {
        if (observer) observer({Phase::TopicUpdate, it, 0, axis});
        update_topics_mode(model, dataset, axis, config.clip_floor, threads);
      }
    }

    loss = record(it);
    if (sink && !sink(it, loss, result.trace.back().seconds)) {
      result.termination = Termination::UserAbort;
      return result;
    }
    if (config.early_stop.enabled &&
        early_stop_check(result.trace, config.early_stop.rel_tol,
                         config.early_stop.patience)) {
      result.termination = Termination::Tolerance;
      return result;
    }
  }
  return result;
}

FitResult fit(const StratifiedDataset& dataset, const FitConfig& config,
              const ProgressSink& sink, std::size_t threads,
              const PhaseObserver& observer) {
  return fit_from(dataset, config, init_model(dataset, config), sink, threads,
                  observer);
}

double relative_loss(const FitResult& result, const StratifiedDataset& dataset) {
  if (result.trace.empty()) {
    throw std::invalid_argument("fit result carries no loss trace");
  }
  const double denom = dataset.total_sq_norm();
  if (denom == 0.0) {
    throw std::invalid_argument(
        "relative loss is undefined for an all-zero dataset");
  }
  return result.trace.back().objective / denom;
}

}  // namespace sntf
