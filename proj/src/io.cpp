// SPDX-License-Identifier: MIT
#include "sntf/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sntf {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'S', 'N', 'T', 'F'};
constexpr std::size_t kChunkDoubles = 8192;

void put_bytes_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) {
    out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
}

void put_bytes_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
}

std::uint32_t load_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

std::uint64_t load_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

void read_exact(std::istream& in, char* dst, std::size_t count,
                std::uint64_t& offset, const char* what) {
  in.read(dst, static_cast<std::streamsize>(count));
  const auto got = static_cast<std::size_t>(in.gcount());
  offset += got;
  if (got != count) {
    throw FormatError(std::string("truncated ") + what + ": expected " +
                          std::to_string(count) + " bytes, got " +
                          std::to_string(got),
                      offset);
  }
}

// Writes via a sibling temp file and renames into place, so a reader never
// sees a partial file.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(const fs::path& path)
      : path_(path), temp_(path.string() + ".tmp") {
    stream_.open(temp_, std::ios::binary | std::ios::trunc);
    if (!stream_) {
      throw std::runtime_error("cannot open " + temp_.string() +
                               " for writing");
    }
  }

  ~AtomicFileWriter() {
    if (!committed_) {
      stream_.close();
      std::error_code ec;
      fs::remove(temp_, ec);
    }
  }

  std::ostream& stream() { return stream_; }

  void commit() {
    stream_.flush();
    if (!stream_) {
      throw std::runtime_error("write failed for " + path_.string());
    }
    stream_.close();
    fs::rename(temp_, path_);
    committed_ = true;
  }

 private:
  fs::path path_;
  fs::path temp_;
  std::ofstream stream_;
  bool committed_ = false;
};

}  // namespace

void write_tensor_stream(std::ostream& out, const DenseTensor& x) {
  std::string header;
  header.append(kMagic, 4);
  put_bytes_u32(header, kTensorFormatVersion);
  put_bytes_u32(header, static_cast<std::uint32_t>(x.ndim()));
  for (std::size_t d : x.shape()) {
    put_bytes_u64(header, static_cast<std::uint64_t>(d));
  }
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::string chunk;
  chunk.reserve(kChunkDoubles * 8);
  for (double v : x.values()) {
    put_bytes_u64(chunk, std::bit_cast<std::uint64_t>(v));
    if (chunk.size() >= kChunkDoubles * 8) {
      out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
      chunk.clear();
    }
  }
  if (!chunk.empty()) {
    out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  }
}

void write_tensor(const fs::path& path, const DenseTensor& x) {
  AtomicFileWriter writer(path);
  write_tensor_stream(writer.stream(), x);
  writer.commit();
}

DenseTensor read_tensor_stream(std::istream& in, std::uint64_t& offset) {
  std::array<char, 12> head{};
  const std::uint64_t start = offset;
  read_exact(in, head.data(), head.size(), offset, "tensor header");
  if (std::memcmp(head.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic, expected \"SNTF\"", start);
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(head.data());
  const std::uint32_t version = load_u32(bytes + 4);
  if (version != kTensorFormatVersion) {
    throw FormatError("unsupported tensor format version " +
                          std::to_string(version),
                      start + 4);
  }
  const std::uint32_t ndim = load_u32(bytes + 8);
  if (ndim == 0) {
    throw FormatError("tensor mode count must be >= 1", start + 8);
  }

  std::vector<std::size_t> shape(ndim);
  std::uint64_t count = 1;
  for (std::uint32_t a = 0; a < ndim; ++a) {
    std::array<char, 8> dim_bytes{};
    const std::uint64_t dim_offset = offset;
    read_exact(in, dim_bytes.data(), 8, offset, "tensor dims");
    const std::uint64_t d =
        load_u64(reinterpret_cast<const unsigned char*>(dim_bytes.data()));
    if (d == 0) {
      throw FormatError("tensor dimension must be >= 1", dim_offset);
    }
    if (count > UINT64_MAX / d) {
      throw FormatError("tensor dimension product overflows", dim_offset);
    }
    count *= d;
    shape[a] = static_cast<std::size_t>(d);
  }

  // Read the payload chunkwise so a lying header cannot trigger a huge
  // allocation before the truncation is detected.
  std::vector<double> values;
  std::vector<char> buf(kChunkDoubles * 8);
  std::uint64_t remaining = count;
  while (remaining > 0) {
    const std::size_t take =
        static_cast<std::size_t>(std::min<std::uint64_t>(remaining, kChunkDoubles));
    in.read(buf.data(), static_cast<std::streamsize>(take * 8));
    const auto got = static_cast<std::size_t>(in.gcount());
    offset += got;
    if (got != take * 8) {
      throw FormatError(
          "truncated payload: expected " + std::to_string(count * 8) +
              " bytes, got " +
              std::to_string((count - remaining) * 8 + got),
          offset);
    }
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    for (std::size_t k = 0; k < take; ++k) {
      values.push_back(std::bit_cast<double>(load_u64(p + k * 8)));
    }
    remaining -= take;
  }
  return DenseTensor(std::move(shape), std::move(values));
}

DenseTensor read_tensor(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string() +
                             " for reading");
  }
  std::uint64_t offset = 0;
  DenseTensor x = read_tensor_stream(in, offset);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after tensor payload", offset);
  }
  return x;
}

StratifiedDataset load_dataset(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) {
    throw std::runtime_error("cannot open manifest " + manifest.string());
  }
  const fs::path base = manifest.parent_path();
  std::vector<DenseTensor> strata;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    strata.push_back(read_tensor(base / line));
  }
  if (strata.empty()) {
    throw FormatError("manifest lists no strata: " + manifest.string(), 0);
  }
  return StratifiedDataset(std::move(strata));
}

void write_manifest(const fs::path& path,
                    std::span<const std::string> relative_paths) {
  AtomicFileWriter writer(path);
  writer.stream() << "# stratified dataset manifest: one tensor per line\n";
  for (const auto& p : relative_paths) writer.stream() << p << "\n";
  writer.commit();
}

void export_pgm(const DenseTensor& image, const fs::path& path,
                std::optional<double> fixed_max) {
  if (image.ndim() != 2) {
    throw std::invalid_argument("PGM export needs a 2-mode tensor");
  }
  const double scale_max = fixed_max.value_or(image.max_value());
  const std::size_t height = image.dim(0);
  const std::size_t width = image.dim(1);

  AtomicFileWriter writer(path);
  writer.stream() << "P5\n" << width << " " << height << "\n255\n";
  std::string row(width, '\0');
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double v = image[y * width + x];
      if (v < 0.0) v = 0.0;
      if (v > scale_max) v = scale_max;
      const double level =
          scale_max > 0.0 ? std::floor(v / scale_max * 255.0 + 0.5) : 0.0;
      row[x] = static_cast<char>(static_cast<unsigned char>(level));
    }
    writer.stream().write(row.data(), static_cast<std::streamsize>(width));
  }
  writer.commit();
}

void export_loss_csv(const LossTrace& trace, const fs::path& path) {
  if (trace.empty()) {
    throw std::invalid_argument("cannot export an empty loss trace");
  }
  AtomicFileWriter writer(path);
  writer.stream() << "iteration,objective,seconds\n";
  char buf[96];
  for (const auto& p : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.6f\n", p.iteration,
                  p.objective, p.seconds);
    writer.stream() << buf;
  }
  writer.commit();
}

namespace {

DenseTensor vector_tensor(const FactorVec& v) {
  return DenseTensor({v.size()}, v);
}

FactorVec expect_vector(std::istream& in, std::uint64_t& offset) {
  DenseTensor t = read_tensor_stream(in, offset);
  if (t.ndim() != 1) {
    throw FormatError("model payload entries must be 1-mode tensors", offset);
  }
  return FactorVec(t.values().begin(), t.values().end());
}

struct IndexEntry {
  std::string role;
  std::size_t stratum = 0;  // 1-based, 0 for topics
  std::size_t rank = 0;     // 1-based
  std::size_t mode = 0;     // 1-based tensor mode
};

std::vector<IndexEntry> canonical_entries(std::size_t s, std::size_t r,
                                          std::size_t ndim,
                                          std::span<const std::size_t> rp) {
  std::vector<IndexEntry> entries;
  for (std::size_t i = 1; i <= s; ++i) {
    for (std::size_t j = 1; j <= rp[i - 1]; ++j) {
      for (std::size_t mode = 2; mode <= ndim; ++mode) {
        entries.push_back({"strata_factor", i, j, mode});
      }
    }
  }
  for (std::size_t i = 1; i <= s; ++i) {
    for (std::size_t j = 1; j <= r; ++j) {
      entries.push_back({"coding", i, j, 1});
    }
  }
  for (std::size_t j = 1; j <= r; ++j) {
    for (std::size_t mode = 2; mode <= ndim; ++mode) {
      entries.push_back({"topic", 0, j, mode});
    }
  }
  return entries;
}

}  // namespace

void save_model(const fs::path& path, const ModelState& model) {
  const std::size_t s = model.stratum_count();
  const std::size_t r = model.topic_rank();
  const std::size_t ndim = model.ndim();
  std::vector<std::size_t> rp(s);
  for (std::size_t i = 0; i < s; ++i) rp[i] = model.strata_rank(i);
  const auto entries = canonical_entries(s, r, ndim, rp);

  AtomicFileWriter writer(path);
  std::ostream& out = writer.stream();
  out << "SNTF-MODEL " << kModelFormatVersion << "\n";
  out << "topics " << r << "\n";
  out << "strata " << s << "\n";
  out << "entries " << entries.size() << "\n";
  for (const auto& e : entries) {
    out << e.role << " " << e.stratum << " " << e.rank << " " << e.mode
        << "\n";
  }
  out << "payload\n";
  for (const auto& e : entries) {
    const FactorVec* v = nullptr;
    if (e.role == "strata_factor") {
      v = &model.strata_factors[e.stratum - 1][e.rank - 1][e.mode - 2];
    } else if (e.role == "coding") {
      v = &model.codings[e.stratum - 1][e.rank - 1];
    } else {
      v = &model.topics[e.rank - 1][e.mode - 2];
    }
    write_tensor_stream(out, vector_tensor(*v));
  }
  writer.commit();
}

ModelState load_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open model file " + path.string());
  }

  std::size_t line_no = 0;
  std::uint64_t offset = 0;
  auto next_line = [&](const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
      throw FormatError(std::string("model index ends before ") + what +
                            " (line " + std::to_string(line_no + 1) + ")",
                        offset);
    }
    ++line_no;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  auto bad_line = [&](const std::string& why) -> FormatError {
    return FormatError("model index line " + std::to_string(line_no) + ": " +
                           why,
                       offset);
  };
  auto parse_sized = [&](const std::string& line, const std::string& key) {
    std::istringstream ss(line);
    std::string word;
    long long value = -1;
    if (!(ss >> word >> value) || word != key || value < 0 ||
        (ss >> word)) {
      throw bad_line("expected \"" + key + " <count>\"");
    }
    return static_cast<std::size_t>(value);
  };

  {
    const std::string line = next_line("the header");
    if (line != "SNTF-MODEL " + std::to_string(kModelFormatVersion)) {
      throw bad_line("expected \"SNTF-MODEL " +
                     std::to_string(kModelFormatVersion) + "\"");
    }
  }
  const std::size_t r = parse_sized(next_line("the topic count"), "topics");
  const std::size_t s = parse_sized(next_line("the stratum count"), "strata");
  const std::size_t entry_count =
      parse_sized(next_line("the entry count"), "entries");
  if (r == 0 || s == 0) {
    throw bad_line("model needs at least one topic and one stratum");
  }

  std::vector<IndexEntry> entries;
  for (std::size_t k = 0; k < entry_count; ++k) {
    const std::string line = next_line("the entry list");
    std::istringstream ss(line);
    IndexEntry e;
    long long stratum = -1, rank = -1, mode = -1;
    std::string extra;
    if (!(ss >> e.role >> stratum >> rank >> mode) || (ss >> extra) ||
        stratum < 0 || rank < 1 || mode < 1) {
      throw bad_line("expected \"<role> <stratum> <rank> <mode>\"");
    }
    e.stratum = static_cast<std::size_t>(stratum);
    e.rank = static_cast<std::size_t>(rank);
    e.mode = static_cast<std::size_t>(mode);
    entries.push_back(e);
  }
  if (next_line("the payload marker") != "payload") {
    throw bad_line("expected \"payload\"");
  }

  // Derive the structure, then require the canonical entry order.
  std::size_t ndim = 1;
  for (const auto& e : entries) ndim = std::max(ndim, e.mode);
  std::vector<std::size_t> rp(s, 0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.role == "strata_factor") {
      if (e.stratum < 1 || e.stratum > s) {
        line_no = 5 + k;
        throw bad_line("strata_factor stratum out of range");
      }
      rp[e.stratum - 1] = std::max(rp[e.stratum - 1], e.rank);
    } else if (e.role != "coding" && e.role != "topic") {
      line_no = 5 + k;
      throw bad_line("unknown role \"" + e.role + "\"");
    }
  }
  const auto expected = canonical_entries(s, r, ndim, rp);
  if (entries.size() != expected.size()) {
    throw FormatError("model index entry count " +
                          std::to_string(entries.size()) +
                          " does not cover the model structure (expected " +
                          std::to_string(expected.size()) + ")",
                      offset);
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& got = entries[k];
    const auto& want = expected[k];
    if (got.role != want.role || got.stratum != want.stratum ||
        got.rank != want.rank || got.mode != want.mode) {
      line_no = 5 + k;
      throw bad_line("expected entry \"" + want.role + " " +
                     std::to_string(want.stratum) + " " +
                     std::to_string(want.rank) + " " +
                     std::to_string(want.mode) + "\"");
    }
  }

  ModelState model;
  model.strata_factors.assign(s, {});
  model.codings.assign(s, {});
  model.topics.assign(r, FactorTuple(ndim - 1));
  for (std::size_t i = 0; i < s; ++i) {
    model.strata_factors[i].assign(rp[i], FactorTuple(ndim - 1));
    model.codings[i].assign(r, FactorVec{});
  }
  for (const auto& e : expected) {
    FactorVec v = expect_vector(in, offset);
    if (e.role == "strata_factor") {
      model.strata_factors[e.stratum - 1][e.rank - 1][e.mode - 2] =
          std::move(v);
    } else if (e.role == "coding") {
      model.codings[e.stratum - 1][e.rank - 1] = std::move(v);
    } else {
      model.topics[e.rank - 1][e.mode - 2] = std::move(v);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after model payload", offset);
  }

  // Length consistency across entries sharing a mode.
  const auto trailing = model.trailing_dims();
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t k = 0; k + 1 < ndim; ++k) {
      if (model.topics[j][k].size() != trailing[k]) {
        throw FormatError("topic factor lengths disagree on mode " +
                              std::to_string(k + 2),
                          offset);
      }
    }
  }
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t d1 = model.codings[i].front().size();
    for (const auto& w : model.codings[i]) {
      if (w.size() != d1) {
        throw FormatError("coding lengths disagree in stratum " +
                              std::to_string(i + 1),
                          offset);
      }
    }
    for (const auto& tuple : model.strata_factors[i]) {
      for (std::size_t k = 0; k + 1 < ndim; ++k) {
        if (tuple[k].size() != trailing[k]) {
          throw FormatError("strata factor lengths disagree in stratum " +
                                std::to_string(i + 1),
                            offset);
        }
      }
    }
  }
  return model;
}

}  // namespace sntf
