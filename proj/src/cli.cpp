// SPDX-License-Identifier: MIT
#include "sntf/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "sntf/io.hpp"
#include "sntf/parallel.hpp"
#include "sntf/solver.hpp"

namespace sntf::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.push_back("");
  return parts;
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    if (value.empty() || value.front() == '-') throw std::invalid_argument("");
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected a non-negative integer, got \"" +
                                value + "\"");
  }
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected a number, got \"" + value +
                                "\"");
  }
}

std::vector<std::size_t> parse_size_list(const std::string& value,
                                         const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& part : split(value, ',')) {
    if (part.empty()) continue;
    out.push_back(static_cast<std::size_t>(parse_u64(part, key)));
  }
  return out;
}

// Reads key=value lines, skipping blanks and '#' comments. repeatable keys
// collect every occurrence; all others may appear once.
std::multimap<std::string, std::string> read_kv_lines(
    std::istream& in, const std::vector<std::string>& known,
    const std::vector<std::string>& repeatable) {
  std::multimap<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected key=value, got \"" + stripped +
                                  "\"");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("unknown key \"" + key + "\" on line " +
                                  std::to_string(line_no));
    }
    const bool repeats = std::find(repeatable.begin(), repeatable.end(),
                                   key) != repeatable.end();
    if (!repeats && kv.count(key) > 0) {
      throw std::invalid_argument("duplicate key \"" + key + "\" on line " +
                                  std::to_string(line_no));
    }
    kv.emplace(key, value);
  }
  return kv;
}

std::optional<std::string> single(const std::multimap<std::string, std::string>& kv,
                                  const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  return it->second;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  static const std::vector<std::string> known = {
      "topic_rank",  "strata_rank", "iterations",    "strata_sweeps",
      "lambda",      "regularized_modes", "seed",    "clip_floor",
      "normalization", "early_stop"};
  const auto kv = read_kv_lines(in, known, {});

  RunConfig rc;
  const auto topic = single(kv, "topic_rank");
  if (!topic) throw std::invalid_argument("missing required key topic_rank");
  rc.topic_rank = static_cast<std::size_t>(parse_u64(*topic, "topic_rank"));
  if (rc.topic_rank == 0) {
    throw std::invalid_argument("topic_rank must be >= 1");
  }

  const auto iters = single(kv, "iterations");
  if (!iters) throw std::invalid_argument("missing required key iterations");
  rc.iterations = static_cast<std::size_t>(parse_u64(*iters, "iterations"));
  if (rc.iterations == 0) {
    throw std::invalid_argument("iterations must be >= 1");
  }

  if (const auto v = single(kv, "strata_rank")) {
    rc.strata_ranks = parse_size_list(*v, "strata_rank");
    if (rc.strata_ranks.empty()) {
      throw std::invalid_argument("strata_rank needs at least one value");
    }
  }
  if (const auto v = single(kv, "strata_sweeps")) {
    rc.strata_sweeps = static_cast<std::size_t>(parse_u64(*v, "strata_sweeps"));
    if (rc.strata_sweeps == 0) {
      throw std::invalid_argument("strata_sweeps must be >= 1");
    }
  }
  if (const auto v = single(kv, "lambda")) {
    rc.lambda = parse_double(*v, "lambda");
    if (rc.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  }
  if (const auto v = single(kv, "regularized_modes")) {
    rc.regularized_modes = parse_size_list(*v, "regularized_modes");
    for (std::size_t mode : *rc.regularized_modes) {
      if (mode < 2) {
        throw std::invalid_argument(
            "regularized_modes entries are trailing modes (>= 2)");
      }
    }
  }
  if (const auto v = single(kv, "seed")) rc.seed = parse_u64(*v, "seed");
  if (const auto v = single(kv, "clip_floor")) {
    rc.clip_floor = parse_double(*v, "clip_floor");
    if (!(rc.clip_floor > 0.0)) {
      throw std::invalid_argument("clip_floor must be positive");
    }
  }
  if (const auto v = single(kv, "normalization")) {
    if (*v == "l2") {
      rc.normalization = Norm::L2;
    } else if (*v == "l1") {
      rc.normalization = Norm::L1;
    } else {
      throw std::invalid_argument("normalization must be l2 or l1, got \"" +
                                  *v + "\"");
    }
  }
  if (const auto v = single(kv, "early_stop")) {
    if (*v != "off") {
      const auto parts = split(*v, ',');
      if (parts.size() != 2) {
        throw std::invalid_argument(
            "early_stop must be \"off\" or \"rel_tol,patience\"");
      }
      rc.early_stop.enabled = true;
      rc.early_stop.rel_tol = parse_double(parts[0], "early_stop tolerance");
      rc.early_stop.patience =
          static_cast<std::size_t>(parse_u64(parts[1], "early_stop patience"));
      if (rc.early_stop.rel_tol < 0.0 || rc.early_stop.patience == 0) {
        throw std::invalid_argument(
            "early_stop needs rel_tol >= 0 and patience >= 1");
      }
    }
  }

  if (rc.lambda > 0.0 && rc.regularized_modes.has_value() &&
      rc.regularized_modes->empty()) {
    throw std::invalid_argument(
        "lambda > 0 contradicts an empty regularized_modes list");
  }
  return rc;
}

RunConfig parse_run_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file " + path.string());
  }
  return parse_run_config(in);
}

FitConfig to_fit_config(const RunConfig& rc, std::size_t stratum_count,
                        std::size_t ndim) {
  FitConfig cfg;
  cfg.topic_rank = rc.topic_rank;
  cfg.strata_ranks = resolve_strata_ranks(rc.strata_ranks, stratum_count);
  cfg.outer_iterations = rc.iterations;
  cfg.strata_sweeps = rc.strata_sweeps;
  cfg.reg_strength = rc.lambda;
  if (rc.regularized_modes.has_value()) {
    std::vector<std::size_t> axes;
    for (std::size_t mode : *rc.regularized_modes) {
      if (mode > ndim) {
        throw std::invalid_argument("regularized mode " +
                                    std::to_string(mode) +
                                    " exceeds the tensor mode count " +
                                    std::to_string(ndim));
      }
      axes.push_back(mode - 1);
    }
    cfg.regularized_axes = std::move(axes);
  }
  cfg.normalization = rc.normalization;
  cfg.early_stop = rc.early_stop;
  cfg.seed = rc.seed;
  cfg.clip_floor = rc.clip_floor;
  return cfg;
}

SynthSpec parse_synth_spec(std::istream& in) {
  static const std::vector<std::string> known = {
      "strata",      "stratum_samples", "trailing_dims", "topic_rank",
      "strata_rank", "density",         "noise_eps",     "seed",
      "salt_pepper", "scale_to_unit",   "watermark"};
  const auto kv = read_kv_lines(in, known, {"watermark"});

  SynthSpec spec;
  const auto samples = single(kv, "stratum_samples");
  if (!samples) {
    throw std::invalid_argument("missing required key stratum_samples");
  }
  spec.planted.sample_counts = parse_size_list(*samples, "stratum_samples");

  if (const auto v = single(kv, "strata")) {
    const auto s = static_cast<std::size_t>(parse_u64(*v, "strata"));
    if (spec.planted.sample_counts.size() == 1 && s > 1) {
      spec.planted.sample_counts.assign(s, spec.planted.sample_counts[0]);
    }
    if (spec.planted.sample_counts.size() != s) {
      throw std::invalid_argument("stratum_samples lists " +
                                  std::to_string(spec.planted.sample_counts.size()) +
                                  " strata but strata=" + std::to_string(s));
    }
  }

  const auto dims = single(kv, "trailing_dims");
  if (!dims) {
    throw std::invalid_argument("missing required key trailing_dims");
  }
  spec.planted.trailing_dims = parse_size_list(*dims, "trailing_dims");
  if (spec.planted.trailing_dims.empty()) {
    throw std::invalid_argument("trailing_dims needs at least one dimension");
  }

  if (const auto v = single(kv, "topic_rank")) {
    spec.planted.topic_rank =
        static_cast<std::size_t>(parse_u64(*v, "topic_rank"));
  }
  if (const auto v = single(kv, "strata_rank")) {
    spec.planted.strata_ranks = parse_size_list(*v, "strata_rank");
  }
  if (const auto v = single(kv, "density")) {
    spec.planted.density = parse_double(*v, "density");
  }
  if (const auto v = single(kv, "noise_eps")) {
    spec.planted.noise_amplitude = parse_double(*v, "noise_eps");
  }
  if (const auto v = single(kv, "seed")) {
    spec.planted.seed = parse_u64(*v, "seed");
  }
  if (const auto v = single(kv, "salt_pepper")) {
    spec.salt_pepper = parse_double(*v, "salt_pepper");
    if (spec.salt_pepper < 0.0 || spec.salt_pepper > 0.5) {
      throw std::invalid_argument("salt_pepper must lie in [0, 0.5]");
    }
  }
  if (const auto v = single(kv, "scale_to_unit")) {
    if (*v == "true") {
      spec.scale_to_unit = true;
    } else if (*v == "false") {
      spec.scale_to_unit = false;
    } else {
      throw std::invalid_argument("scale_to_unit must be true or false");
    }
  }

  // watermark = stratum : lo-hi , lo-hi , ... : value  (half-open ranges,
  // one per trailing mode)
  const auto range = kv.equal_range("watermark");
  for (auto it = range.first; it != range.second; ++it) {
    const auto parts = split(it->second, ':');
    if (parts.size() != 3) {
      throw std::invalid_argument(
          "watermark must be \"stratum:ranges:value\", got \"" + it->second +
          "\"");
    }
    WatermarkDirective wm;
    wm.stratum = static_cast<std::size_t>(parse_u64(parts[0], "watermark stratum"));
    for (const auto& r : split(parts[1], ',')) {
      const auto dash = r.find('-');
      if (dash == std::string::npos) {
        throw std::invalid_argument("watermark range \"" + r +
                                    "\" must be lo-hi");
      }
      IndexRange ir;
      ir.lo = static_cast<std::size_t>(
          parse_u64(trim(r.substr(0, dash)), "watermark range"));
      ir.hi = static_cast<std::size_t>(
          parse_u64(trim(r.substr(dash + 1)), "watermark range"));
      wm.trailing_region.push_back(ir);
    }
    if (wm.trailing_region.size() != spec.planted.trailing_dims.size()) {
      throw std::invalid_argument(
          "watermark needs one lo-hi range per trailing mode");
    }
    for (std::size_t k = 0; k < wm.trailing_region.size(); ++k) {
      const auto& ir = wm.trailing_region[k];
      if (ir.lo > ir.hi || ir.hi > spec.planted.trailing_dims[k]) {
        throw std::invalid_argument("watermark range on trailing mode " +
                                    std::to_string(k + 2) +
                                    " is out of bounds");
      }
    }
    wm.value = parse_double(parts[2], "watermark value");
    if (wm.value < 0.0 || wm.value > 1.0) {
      throw std::invalid_argument("watermark value must lie in [0, 1]");
    }
    if (wm.stratum >= spec.planted.sample_counts.size()) {
      throw std::invalid_argument("watermark stratum out of range");
    }
    spec.watermarks.push_back(std::move(wm));
  }
  return spec;
}

SynthSpec parse_synth_spec_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open synth spec " + path.string());
  }
  return parse_synth_spec(in);
}

namespace {

struct CommonFlags {
  std::string manifest;
  std::string config;
  std::string out_dir;
  std::size_t threads = 0;  // 0 = resolve from env / hardware
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

std::size_t resolve_threads(std::size_t flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("STRAT_NTF_THREADS")) {
    const auto v = parse_u64(env, "STRAT_NTF_THREADS");
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return default_thread_count();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_sizes(std::span<const std::size_t> values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(values[k]);
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
}

int run_fit(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  RunConfig rc = parse_run_config_file(flags.config);
  if (flags.seed_override) rc.seed = *flags.seed_override;

  const StratifiedDataset dataset = load_dataset(flags.manifest);
  const FitConfig cfg =
      to_fit_config(rc, dataset.stratum_count(), dataset.ndim());
  const std::size_t threads = resolve_threads(flags.threads);

  fs::create_directories(flags.out_dir);
  const fs::path out_dir(flags.out_dir);

  ProgressSink sink;
  if (!flags.quiet) {
    sink = [&](std::size_t it, double loss, double) {
      out << "iteration " << it << " objective " << format_double(loss)
          << "\n";
      return true;
    };
  }

  const auto t0 = std::chrono::steady_clock::now();
  FitResult result;
  try {
    result = fit(dataset, cfg, sink, threads);
  } catch (const NumericAbort& abort) {
    const fs::path dump = out_dir / "abort_state.sntfm";
    save_model(dump, abort.state);
    err << "numeric abort: " << abort.what() << "; state dumped to "
        << dump.string() << "\n";
    return kExitNumeric;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  save_model(out_dir / "model.sntfm", result.model);
  export_loss_csv(result.trace, out_dir / "loss.csv");

  std::vector<std::size_t> reg_modes;
  if (cfg.regularized_axes.has_value()) {
    for (std::size_t axis : *cfg.regularized_axes) reg_modes.push_back(axis + 1);
  } else {
    for (std::size_t axis = 1; axis < dataset.ndim(); ++axis) {
      reg_modes.push_back(axis + 1);
    }
  }
  std::ostringstream meta;
  meta << "command=fit\n";
  meta << "manifest=" << flags.manifest << "\n";
  meta << "strata=" << dataset.stratum_count() << "\n";
  meta << "topic_rank=" << cfg.topic_rank << "\n";
  meta << "strata_rank=" << join_sizes(cfg.strata_ranks) << "\n";
  meta << "iterations=" << cfg.outer_iterations << "\n";
  meta << "strata_sweeps=" << cfg.strata_sweeps << "\n";
  meta << "lambda=" << format_double(cfg.reg_strength) << "\n";
  meta << "regularized_modes=" << join_sizes(reg_modes) << "\n";
  meta << "normalization=" << (cfg.normalization == Norm::L2 ? "l2" : "l1")
       << "\n";
  if (cfg.early_stop.enabled) {
    meta << "early_stop=" << format_double(cfg.early_stop.rel_tol) << ","
         << cfg.early_stop.patience << "\n";
  } else {
    meta << "early_stop=off\n";
  }
  meta << "seed=" << cfg.seed << "\n";
  meta << "clip_floor=" << format_double(cfg.clip_floor) << "\n";
  meta << "threads=" << threads << "\n";
  meta << "tensor_format_version=" << kTensorFormatVersion << "\n";
  meta << "model_format_version=" << kModelFormatVersion << "\n";
  meta << "final_objective=" << format_double(result.trace.back().objective)
       << "\n";
  meta << "relative_loss=" << format_double(relative_loss(result, dataset))
       << "\n";
  meta << "termination=" << to_string(result.termination) << "\n";
  meta << "wall_seconds=" << wall << "\n";
  write_text_file(out_dir / "run_meta.txt", meta.str());

  if (!flags.quiet) {
    out << "final objective " << format_double(result.trace.back().objective)
        << " (" << to_string(result.termination) << ")\n";
  }
  return kExitOk;
}

int run_synth(const std::string& spec_path, const std::string& out_dir_s,
              bool quiet, std::ostream& out) {
  const SynthSpec spec = parse_synth_spec_file(spec_path);
  PlantedInstance planted = generate_planted(spec.planted);

  const std::size_t s = spec.planted.sample_counts.size();
  std::vector<DenseTensor> strata;
  strata.reserve(s);
  for (std::size_t i = 0; i < s; ++i) strata.push_back(planted.dataset.stratum(i));

  for (const auto& wm : spec.watermarks) {
    std::vector<IndexRange> region;
    region.push_back({0, strata[wm.stratum].dim(0)});  // every sample
    region.insert(region.end(), wm.trailing_region.begin(),
                  wm.trailing_region.end());
    strata[wm.stratum] = apply_block_watermark(strata[wm.stratum], region,
                                               wm.value);
  }

  double scale = 1.0;
  if (spec.scale_to_unit) {
    double max_entry = 0.0;
    for (const auto& t : strata) max_entry = std::max(max_entry, t.max_value());
    if (max_entry > 0.0) {
      scale = max_entry;
      for (auto& t : strata) {
        for (double& v : t.values()) v /= scale;
      }
      // Rescale the ground truth the same way: codings and one strata-factor
      // mode absorb the factor, so the truth still reconstructs the scaled
      // data (pre-watermark, pre-noise).
      for (auto& coding : planted.ground_truth.codings) {
        for (auto& w : coding) {
          for (double& v : w) v /= scale;
        }
      }
      for (auto& stratum_tuples : planted.ground_truth.strata_factors) {
        for (auto& tuple : stratum_tuples) {
          for (double& v : tuple.front()) v /= scale;
        }
      }
    }
  }

  if (spec.salt_pepper > 0.0) {
    for (auto& t : strata) {
      for (double v : t.values()) {
        if (v < 0.0 || v > 1.0) {
          throw std::invalid_argument(
              "salt_pepper needs data in [0, 1]; set scale_to_unit=true");
        }
      }
    }
    for (std::size_t i = 0; i < s; ++i) {
      strata[i] = salt_and_pepper(strata[i], spec.salt_pepper,
                                  spec.planted.seed + i);
    }
  }

  fs::create_directories(out_dir_s);
  const fs::path out_dir(out_dir_s);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < s; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "stratum_%03zu.sntf", i + 1);
    write_tensor(out_dir / name, strata[i]);
    names.emplace_back(name);
  }
  write_manifest(out_dir / "manifest.txt", names);
  save_model(out_dir / "truth_model.sntfm", planted.ground_truth);

  std::ostringstream meta;
  meta << "command=synth\n";
  meta << "strata=" << s << "\n";
  meta << "stratum_samples=" << join_sizes(spec.planted.sample_counts) << "\n";
  meta << "trailing_dims=" << join_sizes(spec.planted.trailing_dims) << "\n";
  meta << "topic_rank=" << spec.planted.topic_rank << "\n";
  meta << "strata_rank="
       << join_sizes(resolve_strata_ranks(spec.planted.strata_ranks, s))
       << "\n";
  meta << "density=" << format_double(spec.planted.density) << "\n";
  meta << "noise_eps=" << format_double(spec.planted.noise_amplitude) << "\n";
  meta << "salt_pepper=" << format_double(spec.salt_pepper) << "\n";
  meta << "scale_to_unit=" << (spec.scale_to_unit ? "true" : "false") << "\n";
  meta << "scale_divisor=" << format_double(scale) << "\n";
  meta << "watermarks=" << spec.watermarks.size() << "\n";
  meta << "seed=" << spec.planted.seed << "\n";
  write_text_file(out_dir / "synth_meta.txt", meta.str());

  if (!quiet) {
    out << "wrote " << s << " strata + manifest to " << out_dir.string()
        << "\n";
  }
  return kExitOk;
}

int run_eval(const std::string& model_path, const std::string& manifest,
             std::ostream& out) {
  const ModelState model = load_model(model_path);
  const StratifiedDataset dataset = load_dataset(manifest);
  model.validate_against(dataset);

  double total = 0.0;
  std::vector<double> per_stratum(dataset.stratum_count());
  for (std::size_t i = 0; i < dataset.stratum_count(); ++i) {
    per_stratum[i] =
        sq_frobenius_distance(dataset.stratum(i), reconstruct(model, i));
    total += per_stratum[i];
  }

  std::vector<std::size_t> sample_counts(dataset.stratum_count());
  std::vector<std::size_t> strata_ranks(dataset.stratum_count());
  for (std::size_t i = 0; i < dataset.stratum_count(); ++i) {
    sample_counts[i] = dataset.sample_count(i);
    strata_ranks[i] = model.strata_rank(i);
  }
  const std::uint64_t params =
      param_count(sample_counts, dataset.trailing_dims(), model.topic_rank(),
                  strata_ranks);

  out << "objective=" << format_double(total) << "\n";
  out << "relative_loss=" << format_double(total / dataset.total_sq_norm())
      << "\n";
  for (std::size_t i = 0; i < dataset.stratum_count(); ++i) {
    out << "stratum_" << (i + 1) << "_loss=" << format_double(per_stratum[i])
        << "\n";
  }
  out << "parameters=" << params << "\n";
  return kExitOk;
}

void write_topk_report(const fs::path& path, std::span<const double> values,
                       std::size_t k) {
  // Descending by value, ties broken by ascending index.
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  std::ostringstream report;
  report << "index value\n";
  for (std::size_t rank = 0; rank < std::min(k, order.size()); ++rank) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu %.10g\n", order[rank],
                  values[order[rank]]);
    report << buf;
  }
  write_text_file(path, report.str());
}

struct SampleRef {
  std::size_t stratum;
  std::size_t sample;
};

int run_export(const std::string& model_path, const std::string& what,
               const std::string& indices, const std::string& out_dir_s,
               std::size_t topk, std::ostream& out, bool quiet) {
  const ModelState model = load_model(model_path);
  fs::create_directories(out_dir_s);
  const fs::path out_dir(out_dir_s);
  const bool image_modes = model.ndim() == 3;
  std::size_t files = 0;

  auto parse_plain_indices = [&](std::size_t limit, const char* what_kind) {
    std::vector<std::size_t> idx;
    if (indices.empty()) {
      idx.resize(limit);
      std::iota(idx.begin(), idx.end(), 0);
      return idx;
    }
    for (const auto& part : split(indices, ',')) {
      if (part.empty()) continue;
      const auto v = static_cast<std::size_t>(parse_u64(part, "--indices"));
      if (v >= limit) {
        throw std::invalid_argument(std::string(what_kind) + " index " +
                                    std::to_string(v) + " out of range");
      }
      idx.push_back(v);
    }
    return idx;
  };

  if (what == "topics") {
    for (std::size_t j : parse_plain_indices(model.topic_rank(), "topic")) {
      if (image_modes) {
        char name[48];
        std::snprintf(name, sizeof name, "topic_%03zu.pgm", j);
        export_pgm(outer_product(model.topics[j]), out_dir / name);
        ++files;
      } else {
        for (std::size_t k = 0; k < model.ndim() - 1; ++k) {
          char name[48];
          std::snprintf(name, sizeof name, "topic_%03zu_mode%zu.txt", j, k + 2);
          write_topk_report(out_dir / name, model.topics[j][k], topk);
          ++files;
        }
      }
    }
  } else if (what == "strata") {
    for (std::size_t i : parse_plain_indices(model.stratum_count(), "stratum")) {
      for (std::size_t j = 0; j < model.strata_rank(i); ++j) {
        if (image_modes) {
          char name[64];
          std::snprintf(name, sizeof name, "stratum_%03zu_feature_%03zu.pgm",
                        i, j);
          export_pgm(outer_product(model.strata_factors[i][j]),
                     out_dir / name);
          ++files;
        } else {
          for (std::size_t k = 0; k < model.ndim() - 1; ++k) {
            char name[64];
            std::snprintf(name, sizeof name,
                          "stratum_%03zu_feature_%03zu_mode%zu.txt", i, j,
                          k + 2);
            write_topk_report(out_dir / name, model.strata_factors[i][j][k],
                              topk);
            ++files;
          }
        }
      }
    }
  } else if (what == "reconstruction") {
    if (indices.empty()) {
      throw std::invalid_argument(
          "reconstruction export needs --indices stratum:sample[,...]");
    }
    std::vector<SampleRef> refs;
    for (const auto& part : split(indices, ',')) {
      if (part.empty()) continue;
      const auto colon = part.find(':');
      if (colon == std::string::npos) {
        throw std::invalid_argument("reconstruction index \"" + part +
                                    "\" must be stratum:sample");
      }
      SampleRef ref{};
      ref.stratum = static_cast<std::size_t>(
          parse_u64(trim(part.substr(0, colon)), "--indices"));
      ref.sample = static_cast<std::size_t>(
          parse_u64(trim(part.substr(colon + 1)), "--indices"));
      if (ref.stratum >= model.stratum_count() ||
          ref.sample >= model.sample_count(ref.stratum)) {
        throw std::invalid_argument("reconstruction index " + part +
                                    " out of range");
      }
      refs.push_back(ref);
    }
    for (const auto& ref : refs) {
      const DenseTensor recon = reconstruct(model, ref.stratum);
      const std::size_t slice = recon.size() / recon.dim(0);
      std::vector<double> values(
          recon.values().begin() + static_cast<std::ptrdiff_t>(ref.sample * slice),
          recon.values().begin() +
              static_cast<std::ptrdiff_t>((ref.sample + 1) * slice));
      char name[64];
      if (image_modes) {
        std::snprintf(name, sizeof name, "reconstruction_%03zu_%03zu.pgm",
                      ref.stratum, ref.sample);
        const auto trailing = model.trailing_dims();
        export_pgm(DenseTensor({trailing[0], trailing[1]}, std::move(values)),
                   out_dir / name);
      } else {
        std::snprintf(name, sizeof name, "reconstruction_%03zu_%03zu.txt",
                      ref.stratum, ref.sample);
        write_topk_report(out_dir / name, values, topk);
      }
      ++files;
    }
  } else {
    throw std::invalid_argument(
        "--what must be topics, strata, or reconstruction");
  }

  if (!quiet) out << "wrote " << files << " files to " << out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Stratified non-negative tensor factorization"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string spec_path, model_path, what, indices;
  std::size_t topk = 3;

  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a dataset");
  fit_cmd->add_option("--manifest", flags.manifest, "Dataset manifest path")
      ->required();
  fit_cmd->add_option("--config", flags.config, "Run configuration file")
      ->required();
  fit_cmd->add_option("--out", flags.out_dir, "Output directory")->required();
  fit_cmd->add_option("--threads", flags.threads,
                      "Worker threads (default: STRAT_NTF_THREADS or all)");
  std::uint64_t seed_value = 0;
  auto* seed_opt = fit_cmd->add_option("--seed", seed_value,
                                       "Override the config seed");
  fit_cmd->add_flag("--quiet", flags.quiet, "Suppress progress output");

  auto* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--spec", spec_path, "Synthetic spec file")
      ->required();
  synth_cmd->add_option("--out", flags.out_dir, "Output directory")
      ->required();
  synth_cmd->add_flag("--quiet", flags.quiet, "Suppress output");

  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate a model against a dataset");
  eval_cmd->add_option("--model", model_path, "Model checkpoint")->required();
  eval_cmd->add_option("--manifest", flags.manifest, "Dataset manifest path")
      ->required();

  auto* export_cmd = app.add_subcommand("export", "Export model components");
  export_cmd->add_option("--model", model_path, "Model checkpoint")
      ->required();
  export_cmd
      ->add_option("--what", what, "topics | strata | reconstruction")
      ->required();
  export_cmd->add_option("--indices", indices,
                         "Comma list; stratum:sample pairs for "
                         "reconstruction; empty = all");
  export_cmd->add_option("--out", flags.out_dir, "Output directory")
      ->required();
  export_cmd->add_option("--topk", topk, "Entries per text report");
  export_cmd->add_flag("--quiet", flags.quiet, "Suppress output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*seed_opt) flags.seed_override = seed_value;

  try {
    if (fit_cmd->parsed()) return run_fit(flags, out, err);
    if (synth_cmd->parsed()) {
      return run_synth(spec_path, flags.out_dir, flags.quiet, out);
    }
    if (eval_cmd->parsed()) return run_eval(model_path, flags.manifest, out);
    if (export_cmd->parsed()) {
      return run_export(model_path, what, indices, flags.out_dir, topk, out,
                        flags.quiet);
    }
  } catch (const NumericAbort& e) {
    err << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace sntf::cli
