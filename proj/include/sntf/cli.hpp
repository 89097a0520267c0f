// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sntf/model.hpp"
#include "sntf/synth.hpp"

namespace sntf::cli {

// Exit codes: 0 success, 2 argument/format errors, 3 numeric abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Parsed key=value run configuration (see README for the key list and
/// defaults). Unknown keys are rejected.
struct RunConfig {
  std::size_t topic_rank = 0;                // required
  std::vector<std::size_t> strata_ranks{0};  // single value or per stratum
  std::size_t iterations = 0;                // required
  std::size_t strata_sweeps = 2;
  double lambda = 0.0;
  /// nullopt = key absent (all trailing modes); engaged empty = explicit
  /// "none", which contradicts lambda > 0.
  std::optional<std::vector<std::size_t>> regularized_modes;  // 1-based modes
  std::uint64_t seed = 0;
  double clip_floor = std::numeric_limits<double>::epsilon();
  Norm normalization = Norm::L2;
  EarlyStop early_stop;
};

RunConfig parse_run_config(std::istream& in);
RunConfig parse_run_config_file(const std::filesystem::path& path);

/// Builds the solver configuration; resolves strata ranks against the
/// stratum count and converts 1-based modes to trailing axes.
FitConfig to_fit_config(const RunConfig& rc, std::size_t stratum_count,
                        std::size_t ndim);

/// One watermark directive: a half-open range per trailing mode, applied to
/// every sample of one stratum.
struct WatermarkDirective {
  std::size_t stratum = 0;  // 0-based
  std::vector<IndexRange> trailing_region;
  double value = 1.0;
};

/// Parsed synthetic-dataset spec (key=value; `watermark` may repeat).
struct SynthSpec {
  PlantedSpec planted;
  double salt_pepper = 0.0;
  bool scale_to_unit = false;
  std::vector<WatermarkDirective> watermarks;
};

SynthSpec parse_synth_spec(std::istream& in);
SynthSpec parse_synth_spec_file(const std::filesystem::path& path);

/// Entry point shared by the binary and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace sntf::cli
