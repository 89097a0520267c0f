// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "sntf/model.hpp"
#include "sntf/solver.hpp"

namespace sntf {

/// Malformed or truncated file contents. Carries the byte offset (binary
/// formats) at which the problem was detected.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}

  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::uint64_t byte_offset_;
};

inline constexpr std::uint32_t kTensorFormatVersion = 1;
inline constexpr std::uint32_t kModelFormatVersion = 1;

// Binary tensor file: magic "SNTF", u32 version, u32 mode count, u64 dims,
// then the row-major payload as little-endian IEEE-754 doubles. Everything
// little-endian regardless of host; see docs/FORMATS.md. Writers go through
// a temp file + rename, so readers never observe partial writes.

void write_tensor(const std::filesystem::path& path, const DenseTensor& x);
DenseTensor read_tensor(const std::filesystem::path& path);

// Stream variants used by the model container; offset tracks the absolute
// position for error reporting.
void write_tensor_stream(std::ostream& out, const DenseTensor& x);
DenseTensor read_tensor_stream(std::istream& in, std::uint64_t& offset);

/// Loads a line-oriented manifest: one tensor path per line, relative to the
/// manifest's directory; '#' lines and blank lines are skipped. Strata order
/// is line order.
StratifiedDataset load_dataset(const std::filesystem::path& manifest);

/// Writes a manifest next to already-written stratum files.
void write_manifest(const std::filesystem::path& path,
                    std::span<const std::string> relative_paths);

/// 8-bit binary PGM (P5). Auto scale maps [0, max entry] onto [0, 255] with
/// round-half-up; a fixed scale clamps values above it. Input must be
/// 2-mode.
void export_pgm(const DenseTensor& image, const std::filesystem::path& path,
                std::optional<double> fixed_max = std::nullopt);

/// CSV with header "iteration,objective,seconds"; objectives carry 17
/// significant digits, so they parse back bit-exactly.
void export_loss_csv(const LossTrace& trace,
                     const std::filesystem::path& path);

// Model checkpoint: a text index of (role, stratum, rank, mode) entries
// followed by the factor vectors framed in the binary tensor format, in
// index order. Round-trips are bit-exact.

void save_model(const std::filesystem::path& path, const ModelState& model);
ModelState load_model(const std::filesystem::path& path);

}  // namespace sntf
