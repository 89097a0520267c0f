// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sntf/model.hpp"

namespace sntf {

struct LossPoint {
  std::size_t iteration;
  double objective;
  double seconds;
};

/// Per-iteration objective values; entry 0 is the pre-update loss, so a run
/// of N iterations yields at most N + 1 points.
using LossTrace = std::vector<LossPoint>;

enum class Termination { MaxIterations, Tolerance, UserAbort };

const char* to_string(Termination t) noexcept;

struct FitResult {
  ModelState model;
  LossTrace trace;
  FitConfig config;
  Termination termination = Termination::MaxIterations;
};

/// Called once per outer iteration (including iteration 0). Return false to
/// abort the fit; the result then carries Termination::UserAbort.
using ProgressSink =
    std::function<bool(std::size_t iteration, double objective, double seconds)>;

enum class Phase {
  StrataUpdate,
  CodingUpdate,
  TopicUpdate,
  TopicUpdateRegularized,
  Normalize,
};

/// One solver step at the granularity of the update schedule: strata updates
/// carry (iteration, sweep, axis); topic phases carry (iteration, axis).
struct PhaseEvent {
  Phase phase;
  std::size_t iteration = 0;
  std::size_t sweep = 0;
  std::size_t axis = 0;
};

using PhaseObserver = std::function<void(const PhaseEvent&)>;

/// Thrown when the objective turns non-finite. Clipping already prevents
/// division blow-ups, so this indicates corrupt input or a genuine bug; the
/// state at failure is attached for diagnostics.
class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(const std::string& what, ModelState state, std::size_t iteration)
      : std::runtime_error(what),
        state(std::move(state)),
        iteration(iteration) {}

  ModelState state;
  std::size_t iteration;
};

/// Runs the full multiplicative-update loop from a random initialization:
/// records the initial objective, then per outer iteration performs
/// strata_sweeps sweeps of per-mode strata updates, the coding updates, and
/// the per-mode topic updates (TV-regularized and normalized on the
/// configured axes when reg_strength > 0), recording the objective after
/// each iteration.
FitResult fit(const StratifiedDataset& dataset, const FitConfig& config,
              const ProgressSink& sink = {}, std::size_t threads = 1,
              const PhaseObserver& observer = {});

/// Same loop from a caller-supplied starting state (warm starts, fixed-point
/// checks).
FitResult fit_from(const StratifiedDataset& dataset, const FitConfig& config,
                   ModelState initial, const ProgressSink& sink = {},
                   std::size_t threads = 1, const PhaseObserver& observer = {});

/// Final objective divided by the dataset's total squared norm.
double relative_loss(const FitResult& result, const StratifiedDataset& dataset);

/// True when the relative improvement over the last `patience` iterations
/// falls below rel_tol. Needs more than `patience` recorded points.
bool early_stop_check(const LossTrace& trace, double rel_tol,
                      std::size_t patience);

}  // namespace sntf
