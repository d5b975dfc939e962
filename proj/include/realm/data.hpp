#pragma once

// Seeded synthetic source/target data, corruption operators, CSV I/O and
// deterministic stream shuffling.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "realm/prng.hpp"
#include "realm/types.hpp"

namespace realm {

enum class Corruption { kGaussianNoise, kFeatureScale, kFeatureDropout };

inline std::string to_string(Corruption c) {
  switch (c) {
    case Corruption::kGaussianNoise: return "gaussian_noise";
    case Corruption::kFeatureScale: return "feature_scale";
    case Corruption::kFeatureDropout: return "feature_dropout";
  }
  return "unknown";
}

inline Corruption parse_corruption(std::string_view name) {
  if (name == "gaussian_noise") return Corruption::kGaussianNoise;
  if (name == "feature_scale") return Corruption::kFeatureScale;
  if (name == "feature_dropout") return Corruption::kFeatureDropout;
  throw std::invalid_argument("unknown corruption '" + std::string(name) + "'");
}

struct SyntheticShift {
  std::size_t classes = 3;
  std::size_t d_in = 2;
  std::size_t n_source = 600;
  std::size_t n_target = 2000;
  std::size_t n_heldout = 1000;
  double blob_separation = 4.0;
  Corruption corruption = Corruption::kGaussianNoise;
  int severity = 5;
  std::uint64_t seed = 7;

  void validate() const {
    if (classes < 2) throw std::invalid_argument("need at least 2 classes");
    if (d_in < 1) throw std::invalid_argument("input dimension must be positive");
    if (n_source == 0 || n_target == 0) throw std::invalid_argument("sample counts must be positive");
    if (!(blob_separation > 0.0) || !std::isfinite(blob_separation)) {
      throw std::invalid_argument("blob separation must be positive");
    }
    if (severity < 1 || severity > 5) throw std::invalid_argument("severity must be in [1, 5]");
  }
};

struct BlobData {
  LabeledSamples source;
  LabeledSamples target_clean;
  LabeledSamples heldout_clean;
};

namespace detail {

// Unit-variance isotropic clusters with means on a circle in the first two
// input dimensions; sample i carries label i mod K.
inline LabeledSamples sample_blobs(std::size_t n, std::size_t classes, std::size_t d_in, double radius,
                                   std::uint64_t seed) {
  SplitMix64 rng(seed);
  LabeledSamples out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % classes;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(classes);
    auto& s = out[i];
    s.label = k;
    s.x.resize(d_in);
    for (std::size_t j = 0; j < d_in; ++j) {
      double mean = 0.0;
      if (j == 0) mean = radius * std::cos(angle);
      if (j == 1) mean = radius * std::sin(angle);
      s.x[j] = rng.gaussian(mean, 1.0);
    }
  }
  return out;
}

}  // namespace detail

/// Blob separation 0 is accepted here (all clusters coincide) even though the
/// SyntheticShift config rejects it.
inline BlobData make_blobs(const SyntheticShift& shift) {
  SyntheticShift check = shift;
  if (check.blob_separation == 0.0) check.blob_separation = 1.0;
  check.validate();
  BlobData d;
  const auto radius = shift.blob_separation;
  d.source = detail::sample_blobs(shift.n_source, shift.classes, shift.d_in, radius,
                                  derive_seed(shift.seed, seed_tag::kSource));
  d.target_clean = detail::sample_blobs(shift.n_target, shift.classes, shift.d_in, radius,
                                        derive_seed(shift.seed, seed_tag::kTarget));
  d.heldout_clean = detail::sample_blobs(shift.n_heldout, shift.classes, shift.d_in, radius,
                                         derive_seed(shift.seed, seed_tag::kHeldout));
  return d;
}

inline LabeledSamples add_gaussian_noise(LabeledSamples samples, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
  SplitMix64 rng(seed);
  for (auto& s : samples) {
    for (double& v : s.x) v += sigma * rng.gaussian();
  }
  return samples;
}

/// gaussian_noise:  x += N(0, (0.4 s)^2) per feature
/// feature_scale:   x_j *= 1 + 0.3 s on a seeded half of the dimensions
/// feature_dropout: x_j = 0 independently with probability 0.1 s
inline LabeledSamples corrupt(LabeledSamples samples, Corruption corruption, int severity, std::uint64_t seed) {
  if (severity < 1 || severity > 5) throw std::invalid_argument("severity must be in [1, 5]");
  const double s = severity;
  switch (corruption) {
    case Corruption::kGaussianNoise:
      return add_gaussian_noise(std::move(samples), 0.4 * s, seed);
    case Corruption::kFeatureScale: {
      if (samples.empty()) return samples;
      const std::size_t d = samples.front().x.size();
      std::vector<std::size_t> dims(d);
      std::iota(dims.begin(), dims.end(), 0);
      SplitMix64 rng(seed);
      for (std::size_t i = d; i > 1; --i) std::swap(dims[i - 1], dims[rng.below(i)]);
      const std::size_t half = (d + 1) / 2;
      const double factor = 1.0 + 0.3 * s;
      for (auto& smp : samples) {
        for (std::size_t i = 0; i < half && i < smp.x.size(); ++i) smp.x[dims[i]] *= factor;
      }
      return samples;
    }
    case Corruption::kFeatureDropout: {
      SplitMix64 rng(seed);
      const double p = 0.1 * s;
      for (auto& smp : samples) {
        for (double& v : smp.x) {
          if (rng.bernoulli(p)) v = 0.0;
        }
      }
      return samples;
    }
  }
  throw std::invalid_argument("unknown corruption");
}

/// Fisher-Yates over SplitMix64: for i = n-1 .. 1, swap(i, below(i + 1)).
inline Stream shuffle_stream(const LabeledSamples& samples, std::uint64_t seed, bool keep_labels = true) {
  if (samples.empty()) throw std::invalid_argument("cannot shuffle an empty sample set");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  Stream st;
  st.shuffle_seed = seed;
  st.inputs.reserve(samples.size());
  for (std::size_t i : order) {
    st.inputs.push_back(samples[i].x);
    if (keep_labels) st.labels.push_back(samples[i].label);
  }
  return st;
}

// --- CSV ---------------------------------------------------------------------

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest text that parses back to exactly `v`.
inline std::string shortest_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string to_csv(const LabeledSamples& samples) {
  std::ostringstream os;
  const std::size_t d = samples.empty() ? 0 : samples.front().x.size();
  for (std::size_t j = 0; j < d; ++j) os << 'x' << j << ',';
  os << "label\n";
  for (const auto& s : samples) {
    for (double v : s.x) os << format_double(v) << ',';
    os << s.label << '\n';
  }
  return os.str();
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& c : cells) {
    while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
    while (!c.empty() && (c.back() == ' ' || c.back() == '\t' || c.back() == '\r')) c.remove_suffix(1);
  }
  return cells;
}

}  // namespace detail

/// Parses a header row naming the feature columns plus exactly one `label`
/// column, followed by one sample per row.
inline LabeledSamples parse_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw CsvError(1, "missing header row");
  ++lineno;
  const auto header = detail::split_csv_line(line);
  std::size_t label_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "label") {
      if (label_col != header.size()) throw CsvError(lineno, "duplicate label column");
      label_col = i;
    }
  }
  if (label_col == header.size()) throw CsvError(lineno, "missing label column");
  if (header.size() < 2) throw CsvError(lineno, "no feature columns");

  LabeledSamples out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw CsvError(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(cells.size()));
    }
    LabeledSample s;
    s.x.reserve(header.size() - 1);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string cell(cells[i]);
      if (i == label_col) {
        std::size_t label = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
          throw CsvError(lineno, "label '" + cell + "' is not a non-negative integer");
        }
        s.label = label;
      } else {
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end != cell.c_str() + cell.size()) {
          throw CsvError(lineno, "value '" + cell + "' is not a decimal number");
        }
        if (!std::isfinite(v)) throw CsvError(lineno, "non-finite value '" + cell + "'");
        s.x.push_back(v);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline LabeledSamples load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_csv(in);
}

inline void write_csv(const std::string& path, const LabeledSamples& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_csv(samples);
  if (!out) throw std::runtime_error("failed writing " + path);
}

/// 64-bit FNV-1a, used for dataset manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace realm
