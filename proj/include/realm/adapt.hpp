#pragma once

// Online, batch-size-one test-time adaptation: NoAdapt, Tent, EATA and REALM.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "realm/model.hpp"
#include "realm/robust_loss.hpp"
#include "realm/types.hpp"

namespace realm {

enum class StrategyKind { kNoAdapt, kTent, kEata, kRealm };

inline std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kNoAdapt: return "noadapt";
    case StrategyKind::kTent: return "tent";
    case StrategyKind::kEata: return "eata";
    case StrategyKind::kRealm: return "realm";
  }
  return "unknown";
}

inline StrategyKind parse_strategy(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "noadapt" || s == "none") return StrategyKind::kNoAdapt;
  if (s == "tent") return StrategyKind::kTent;
  if (s == "eata") return StrategyKind::kEata;
  if (s == "realm") return StrategyKind::kRealm;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

struct Strategy {
  StrategyKind kind = StrategyKind::kRealm;
  bool use_squared = false;
  bool use_scale_factor = false;
  bool use_div_gate = true;

  void validate() const {
    if (kind != StrategyKind::kRealm && (use_squared || use_scale_factor)) {
      throw std::invalid_argument("use_squared and use_scale_factor only apply to the realm strategy");
    }
    if (kind == StrategyKind::kEata && !use_div_gate) {
      throw std::invalid_argument("eata always uses the diversity gate");
    }
  }
};

/// Exponential moving average of past (gated-in) predictions, compared to the
/// current prediction by cosine similarity.
class EmaTracker {
 public:
  EmaTracker() = default;
  EmaTracker(double decay, double threshold) : decay_(decay), threshold_(threshold) {
    if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("ema decay must lie in (0, 1)");
  }

  [[nodiscard]] bool is_set() const { return m_.has_value(); }
  [[nodiscard]] const std::optional<std::vector<double>>& mean() const { return m_; }
  [[nodiscard]] double decay() const { return decay_; }
  [[nodiscard]] double threshold() const { return threshold_; }

  [[nodiscard]] double similarity(std::span<const double> p) const {
    if (!m_) return 0.0;
    double dot = 0.0, np = 0.0, nm = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      dot += p[k] * (*m_)[k];
      np += p[k] * p[k];
      nm += (*m_)[k] * (*m_)[k];
    }
    if (np == 0.0 || nm == 0.0) return 0.0;
    return dot / std::sqrt(np * nm);
  }

  /// True when unset or when cos(p, m) < threshold.
  [[nodiscard]] bool passes(std::span<const double> p) const {
    if (!m_) return true;
    if (m_->size() != p.size()) throw std::invalid_argument("prediction size does not match ema");
    return similarity(p) < threshold_;
  }

  void absorb(std::span<const double> p) {
    if (!m_) {
      m_.emplace(p.begin(), p.end());
      return;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      (*m_)[k] = decay_ * (*m_)[k] + (1.0 - decay_) * p[k];
      sum += (*m_)[k];
    }
    for (double& v : *m_) v /= sum;
  }

 private:
  std::optional<std::vector<double>> m_;
  double decay_ = 0.9;
  double threshold_ = 0.4;
};

struct DivGateResult {
  bool gate = false;
  EmaTracker ema;
};

/// Diversity gate: passes when the prediction differs from the running mean;
/// the mean absorbs only passing predictions. The gate is a plain 0/1 value
/// and never carries gradient.
inline DivGateResult div_gate(EmaTracker ema, std::span<const double> probs) {
  validate_probabilities(probs);
  const bool gate = ema.passes(probs);
  if (gate) ema.absorb(probs);
  return {gate, std::move(ema)};
}

struct OptimizerConfig {
  double lr_theta = 0.005;
  double momentum = 0.9;
  double lr_alpha_lambda = 0.01;

  void validate() const {
    if (!(lr_theta > 0.0)) throw std::invalid_argument("lr_theta must be positive");
    if (!(lr_alpha_lambda > 0.0)) throw std::invalid_argument("lr_alpha_lambda must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  }
};

struct EngineConfig {
  Strategy strategy;
  OptimizerConfig optimizer;
  RobustParams initial;  // alpha0, lambda0 and C (replaced by lambda0 under use_scale_factor)
  double ema_decay = 0.9;
  double div_threshold = 0.4;
};

struct StepRecord {
  std::size_t step = 0;
  double raw_entropy = 0.0;
  double effective_loss = 0.0;
  double weight = 0.0;
  bool s_div = false;
  std::size_t pred = 0;
  std::optional<std::size_t> truth;
  bool updated = false;
  double alpha = 0.0;
  double lambda = 0.0;
  bool anomaly = false;

  bool operator==(const StepRecord&) const = default;
};

class AdaptEngine {
 public:
  AdaptEngine(ToyClassifier model, const EngineConfig& cfg)
      : model_(std::move(model)), cfg_(cfg), params_(cfg.initial), ema_(cfg.ema_decay, cfg.div_threshold) {
    model_.validate();
    cfg_.strategy.validate();
    cfg_.optimizer.validate();
    if (cfg_.strategy.use_scale_factor) params_.scale_c = cfg_.initial.lambda;
    params_.validate();
    velocity_.assign(model_.masked_indices().size(), 0.0);
  }

  StepRecord step(std::span<const double> x, std::optional<std::size_t> truth = std::nullopt) {
    StepRecord rec;
    rec.step = steps_seen_++;
    rec.truth = truth;

    EntropyGrad eg;
    try {
      eg = entropy_loss_and_grad(model_, x);
    } catch (const std::invalid_argument&) {
      if (x.size() != model_.dims.d_in) throw;
      // Non-finite logits surface as an invalid probability vector.
      return flag_anomaly(rec);
    }
    rec.raw_entropy = eg.loss;
    rec.pred = argmax(eg.fwd.probs);
    if (!std::isfinite(eg.loss) || !all_finite(eg.grad)) return flag_anomaly(rec);

    const auto& probs = eg.fwd.probs;
    switch (cfg_.strategy.kind) {
      case StrategyKind::kNoAdapt:
        break;
      case StrategyKind::kTent:
        rec.s_div = true;
        rec.weight = 1.0;
        rec.effective_loss = eg.loss;
        apply_theta_step(eg.grad, 1.0);
        rec.updated = true;
        break;
      case StrategyKind::kEata: {
        const double se = s_ent(eg.loss, params_.lambda);
        rec.s_div = ema_.passes(probs);
        rec.weight = rec.s_div ? se : 0.0;
        rec.effective_loss = rec.weight * eg.loss;
        if (rec.weight > 0.0) {
          ema_.absorb(probs);
          apply_theta_step(eg.grad, rec.weight);
          rec.updated = true;
        }
        break;
      }
      case StrategyKind::kRealm: {
        rec.s_div = cfg_.strategy.use_div_gate ? ema_.passes(probs) : true;
        const double rho = cfg_.strategy.use_squared ? rho_squared(eg.loss, params_) : rho_general(eg.loss, params_);
        const auto g = cfg_.strategy.use_squared ? rho_squared_grad(eg.loss, params_) : rho_grad(eg.loss, params_);
        if (!std::isfinite(rho) || !std::isfinite(g.d_dx) || !std::isfinite(g.d_dalpha) ||
            !std::isfinite(g.d_dlambda)) {
          return flag_anomaly(rec);
        }
        const double gate = rec.s_div ? 1.0 : 0.0;
        rec.effective_loss = gate * rho;
        rec.weight = gate * g.d_dx;
        if (rec.weight > 0.0) {
          if (cfg_.strategy.use_div_gate) ema_.absorb(probs);
          apply_theta_step(eg.grad, rec.weight);
          const double lr = cfg_.optimizer.lr_alpha_lambda;
          params_.alpha -= lr * g.d_dalpha;
          params_.lambda -= lr * g.d_dlambda;
          params_ = params_.projected();
          rec.updated = true;
        }
        break;
      }
    }
    if (rec.updated) ++updates_applied_;
    rec.alpha = params_.alpha;
    rec.lambda = params_.lambda;
    return rec;
  }

  [[nodiscard]] const ToyClassifier& model() const { return model_; }
  [[nodiscard]] const RobustParams& params() const { return params_; }
  [[nodiscard]] const EngineConfig& config() const { return cfg_; }
  [[nodiscard]] const EmaTracker& ema() const { return ema_; }
  [[nodiscard]] std::size_t steps_seen() const { return steps_seen_; }
  [[nodiscard]] std::size_t updates_applied() const { return updates_applied_; }
  [[nodiscard]] std::size_t anomalies() const { return anomalies_; }

 private:
  static bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
  }

  StepRecord& flag_anomaly(StepRecord& rec) {
    rec.anomaly = true;
    rec.updated = false;
    rec.alpha = params_.alpha;
    rec.lambda = params_.lambda;
    ++anomalies_;
    return rec;
  }

  // SGD with momentum on the masked affine parameters:
  //   v <- mu v + scale * g;  theta <- theta - lr v
  void apply_theta_step(std::span<const double> grad, double scale) {
    const auto idx = model_.masked_indices();
    const double mu = cfg_.optimizer.momentum;
    const double lr = cfg_.optimizer.lr_theta;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      velocity_[i] = mu * velocity_[i] + scale * grad[i];
      model_.affine(idx[i]) -= lr * velocity_[i];
    }
  }

  ToyClassifier model_;
  EngineConfig cfg_;
  RobustParams params_;
  EmaTracker ema_;
  std::vector<double> velocity_;
  std::size_t steps_seen_ = 0;
  std::size_t updates_applied_ = 0;
  std::size_t anomalies_ = 0;
};

struct CollapseReport {
  std::vector<bool> windows;
  bool collapsed = false;
};

/// Splits the records into consecutive full windows. A window is collapsed when
/// at least `frac_threshold` of its predictions share one class. The overall
/// verdict ignores the first window and any window whose true labels (when
/// recorded) are themselves that concentrated.
inline CollapseReport detect_collapse(const std::vector<StepRecord>& records, std::size_t window = 200,
                                      double frac_threshold = 0.9) {
  if (window < 10) throw std::invalid_argument("collapse window must be at least 10");
  CollapseReport rep;
  const auto concentrated = [&](const std::vector<std::size_t>& counts) {
    const auto mx = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    return static_cast<double>(mx) >= frac_threshold * static_cast<double>(window);
  };
  for (std::size_t start = 0; start + window <= records.size(); start += window) {
    std::vector<std::size_t> pred_counts, truth_counts;
    bool truth_known = true;
    for (std::size_t i = start; i < start + window; ++i) {
      const auto& r = records[i];
      if (r.pred >= pred_counts.size()) pred_counts.resize(r.pred + 1, 0);
      ++pred_counts[r.pred];
      if (r.truth) {
        if (*r.truth >= truth_counts.size()) truth_counts.resize(*r.truth + 1, 0);
        ++truth_counts[*r.truth];
      } else {
        truth_known = false;
      }
    }
    const bool collapsed = concentrated(pred_counts);
    rep.windows.push_back(collapsed);
    if (collapsed && start > 0 && !(truth_known && concentrated(truth_counts))) rep.collapsed = true;
  }
  return rep;
}

struct RunSummary {
  std::string strategy;
  std::size_t steps = 0;
  std::size_t updates = 0;
  std::size_t anomalies = 0;
  std::optional<double> final_accuracy;
  std::vector<double> online_accuracy;  // cumulative, one entry per step; empty without labels
  CollapseReport collapse;
  double final_alpha = 0.0;
  double final_lambda = 0.0;
};

struct RunResult {
  std::vector<StepRecord> records;
  RunSummary summary;
};

struct CollapseConfig {
  std::size_t window = 200;
  double frac_threshold = 0.9;
};

/// Feeds the stream through the engine one sample at a time, in order.
inline RunResult run_stream(AdaptEngine& engine, const Stream& stream, const CollapseConfig& collapse = {}) {
  if (stream.size() == 0) throw std::invalid_argument("stream is empty");
  if (stream.has_labels() && stream.labels.size() != stream.size()) {
    throw std::invalid_argument("stream labels are not parallel to inputs");
  }
  RunResult out;
  out.records.reserve(stream.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    std::optional<std::size_t> truth;
    if (stream.has_labels()) truth = stream.labels[i];
    auto rec = engine.step(stream.inputs[i], truth);
    if (truth) {
      correct += rec.pred == *truth ? 1 : 0;
      out.summary.online_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(i + 1));
    }
    out.records.push_back(rec);
  }
  auto& s = out.summary;
  s.strategy = to_string(engine.config().strategy.kind);
  s.steps = engine.steps_seen();
  s.updates = engine.updates_applied();
  s.anomalies = engine.anomalies();
  if (!s.online_accuracy.empty()) s.final_accuracy = s.online_accuracy.back();
  s.collapse = detect_collapse(out.records, collapse.window, collapse.frac_threshold);
  s.final_alpha = engine.params().alpha;
  s.final_lambda = engine.params().lambda;
  return out;
}

}  // namespace realm
