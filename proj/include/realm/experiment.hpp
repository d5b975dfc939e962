#pragma once

// End-to-end pipeline: data generation, pretraining, corruption, shuffling and
// one adaptation run. All randomness derives from RunConfig::seed.

#include <optional>

#include "realm/adapt.hpp"
#include "realm/config.hpp"
#include "realm/data.hpp"
#include "realm/model.hpp"
#include "realm/prng.hpp"

namespace realm {

struct PreparedModel {
  ToyClassifier model;
  PretrainReport report;
};

struct TargetData {
  Stream stream;
  LabeledSamples heldout;
};

struct ExperimentResult {
  RunResult run;
  std::optional<double> heldout_accuracy;
  ToyClassifier final_model;
};

inline LabeledSamples source_samples(const RunConfig& cfg) {
  if (!cfg.source_csv.empty()) return load_csv(cfg.source_csv);
  return make_blobs(cfg.shift()).source;
}

inline PreparedModel build_pretrained_model(const RunConfig& cfg) {
  const auto source = source_samples(cfg);
  PreparedModel p;
  p.model = ToyClassifier::random(cfg.dims(), derive_seed(cfg.seed, seed_tag::kModelInit), cfg.init_feature_std);
  p.model.seed = cfg.seed;
  p.report = pretrain(p.model, source,
                      {cfg.pretrain_epochs, cfg.pretrain_lr, derive_seed(cfg.seed, seed_tag::kPretrain),
                       cfg.accuracy_floor});
  if (cfg.freeze_beta) p.model.freeze_beta();
  return p;
}

inline TargetData build_target(const RunConfig& cfg) {
  TargetData t;
  const auto shuffle_seed = derive_seed(cfg.seed, seed_tag::kShuffle);
  if (!cfg.target_csv.empty()) {
    t.stream = shuffle_stream(load_csv(cfg.target_csv), shuffle_seed);
    return t;
  }
  const auto shift = cfg.shift();
  auto blobs = make_blobs(shift);
  const auto target = corrupt(std::move(blobs.target_clean), shift.corruption, shift.severity,
                              derive_seed(cfg.seed, seed_tag::kCorrupt));
  t.stream = shuffle_stream(target, shuffle_seed);
  if (!blobs.heldout_clean.empty()) {
    t.heldout = corrupt(std::move(blobs.heldout_clean), shift.corruption, shift.severity,
                        derive_seed(cfg.seed, seed_tag::kCorruptHeldout));
  }
  return t;
}

inline ExperimentResult run_adaptation(const RunConfig& cfg, ToyClassifier model, const TargetData& target) {
  if (cfg.freeze_beta) model.freeze_beta();
  AdaptEngine engine(std::move(model), cfg.engine());
  ExperimentResult r;
  r.run = run_stream(engine, target.stream, {cfg.collapse_window, cfg.collapse_frac});
  if (!target.heldout.empty()) r.heldout_accuracy = accuracy(engine.model(), target.heldout);
  r.final_model = engine.model();
  return r;
}

inline ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  const auto prepared = build_pretrained_model(cfg);
  return run_adaptation(cfg, prepared.model, build_target(cfg));
}

}  // namespace realm
