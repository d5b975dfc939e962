#pragma once

// CSV and JSON serialization for step logs, run summaries, models, reports
// and run manifests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "realm/adapt.hpp"
#include "realm/config.hpp"
#include "realm/data.hpp"
#include "realm/model.hpp"
#include "realm/spl.hpp"
#include "realm/version.hpp"

namespace realm {

using json = nlohmann::ordered_json;

inline constexpr const char* kStepCsvHeader =
    "step,raw_entropy,effective_loss,weight,s_div,pred,truth,updated,alpha,lambda,anomaly";

/// One row per step; `truth` is left empty when the stream is unlabeled.
inline std::string steps_csv(const std::vector<StepRecord>& records) {
  std::ostringstream os;
  os << kStepCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.step << ',' << format_double(r.raw_entropy) << ',' << format_double(r.effective_loss) << ','
       << format_double(r.weight) << ',' << (r.s_div ? 1 : 0) << ',' << r.pred << ',';
    if (r.truth) os << *r.truth;
    os << ',' << (r.updated ? 1 : 0) << ',' << format_double(r.alpha) << ',' << format_double(r.lambda) << ','
       << (r.anomaly ? 1 : 0) << '\n';
  }
  return os.str();
}

/// Plot-ready cumulative online accuracy, one row per step.
inline std::string online_accuracy_csv(const RunSummary& s) {
  std::ostringstream os;
  os << "step,online_accuracy\n";
  for (std::size_t i = 0; i < s.online_accuracy.size(); ++i) os << i << ',' << format_double(s.online_accuracy[i]) << '\n';
  return os.str();
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json summary_json(const RunSummary& s, std::optional<double> heldout_accuracy = std::nullopt) {
  json j;
  j["strategy"] = s.strategy;
  j["steps"] = s.steps;
  j["updates"] = s.updates;
  j["anomalies"] = s.anomalies;
  j["final_accuracy"] = optional_json(s.final_accuracy);
  j["heldout_accuracy"] = optional_json(heldout_accuracy);
  j["collapsed"] = s.collapse.collapsed;
  std::vector<int> windows;
  for (bool w : s.collapse.windows) windows.push_back(w ? 1 : 0);
  j["collapse_windows"] = windows;
  j["final_alpha"] = s.final_alpha;
  j["final_lambda"] = s.final_lambda;
  return j;
}

inline json model_json(const ToyClassifier& m) {
  json j;
  j["dims"] = {{"d_in", m.dims.d_in}, {"d_feat", m.dims.d_feat}, {"classes", m.dims.classes}};
  j["seed"] = m.seed;
  j["feature_weights"] = m.feature_weights;
  j["feature_bias"] = m.feature_bias;
  j["gamma"] = m.gamma;
  j["beta"] = m.beta;
  j["head_weights"] = m.head_weights;
  j["head_bias"] = m.head_bias;
  std::vector<int> mask(m.adapt_mask.begin(), m.adapt_mask.end());
  j["adapt_mask"] = mask;
  return j;
}

/// Throws std::invalid_argument when fields are missing or inconsistent.
inline ToyClassifier model_from_json(const json& j) {
  try {
    ToyClassifier m;
    const auto& d = j.at("dims");
    m.dims = {d.at("d_in").get<std::size_t>(), d.at("d_feat").get<std::size_t>(), d.at("classes").get<std::size_t>()};
    m.seed = j.at("seed").get<std::uint64_t>();
    m.feature_weights = j.at("feature_weights").get<std::vector<double>>();
    m.feature_bias = j.at("feature_bias").get<std::vector<double>>();
    m.gamma = j.at("gamma").get<std::vector<double>>();
    m.beta = j.at("beta").get<std::vector<double>>();
    m.head_weights = j.at("head_weights").get<std::vector<double>>();
    m.head_bias = j.at("head_bias").get<std::vector<double>>();
    for (int v : j.at("adapt_mask").get<std::vector<int>>()) {
      if (v != 0 && v != 1) throw std::invalid_argument("adapt_mask entries must be 0 or 1");
      m.adapt_mask.push_back(static_cast<std::uint8_t>(v));
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model document: ") + e.what());
  }
}

inline json equivalence_json(const EquivalenceReport& r) {
  json j;
  j["t_count"] = r.t_count;
  j["alpha_count"] = r.alpha_count;
  j["resolution"] = r.resolution;
  j["tolerance"] = r.tolerance;
  j["max_value_dev"] = r.max_value_dev;
  j["max_w_dev"] = r.max_w_dev;
  j["pass"] = r.pass;
  return j;
}

inline json pretrain_json(const PretrainReport& r, std::uint64_t seed) {
  return {{"seed", seed},
          {"initial_accuracy", r.initial_accuracy},
          {"source_accuracy", r.accuracy},
          {"epochs", r.epochs},
          {"converged", r.converged}};
}

inline json config_json(const RunConfig& cfg) {
  json j;
  for (const auto& k : RunConfig::keys()) j[k] = cfg.get(k);
  j["resolved_lambda0"] = cfg.resolved_lambda0();
  j["resolved_lr_alpha_lambda"] = cfg.resolved_lr_alpha_lambda();
  return j;
}

inline json manifest_json(const std::string& command, const RunConfig& cfg) {
  json j;
  j["tool"] = "realm";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config_json(cfg);
  return j;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Generated-dataset manifest: shift parameters, seed and FNV-1a checksums of
/// each split's CSV text.
inline json dataset_manifest_json(const SyntheticShift& shift, const LabeledSamples& source, const LabeledSamples& target,
                                  const LabeledSamples& heldout) {
  json j;
  j["classes"] = shift.classes;
  j["d_in"] = shift.d_in;
  j["blob_separation"] = shift.blob_separation;
  j["corruption"] = to_string(shift.corruption);
  j["severity"] = shift.severity;
  j["seed"] = shift.seed;
  j["splits"] = {
      {"source", {{"rows", source.size()}, {"fnv1a64", hex64(fnv1a64(to_csv(source)))}}},
      {"target", {{"rows", target.size()}, {"fnv1a64", hex64(fnv1a64(to_csv(target)))}}},
      {"heldout", {{"rows", heldout.size()}, {"fnv1a64", hex64(fnv1a64(to_csv(heldout)))}}},
  };
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

inline void save_model(const std::filesystem::path& path, const ToyClassifier& m) { write_json(path, model_json(m)); }
inline ToyClassifier load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

}  // namespace realm
