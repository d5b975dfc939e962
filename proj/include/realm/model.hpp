#pragma once

// Toy classifier with a frozen nonlinear backbone and adaptable affine
// modulation, the small-scale analog of adapting normalization layers:
//
//   h      = tanh(W x + b)          W frozen, b trained only during pretraining
//   z      = gamma * h + beta       (gamma, beta) adaptable, subject to adapt_mask
//   logits = V z + c                V, c frozen after pretraining
//   probs  = softmax(logits)

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "realm/prng.hpp"
#include "realm/robust_loss.hpp"
#include "realm/types.hpp"

namespace realm {

struct ModelDims {
  std::size_t d_in = 2;
  std::size_t d_feat = 32;
  std::size_t classes = 3;

  bool operator==(const ModelDims&) const = default;
};

struct ToyClassifier {
  ModelDims dims;
  std::uint64_t seed = 0;
  std::vector<double> feature_weights;  // d_feat x d_in, row-major
  std::vector<double> feature_bias;     // d_feat
  std::vector<double> gamma;            // d_feat
  std::vector<double> beta;             // d_feat
  std::vector<double> head_weights;     // classes x d_feat, row-major
  std::vector<double> head_bias;        // classes
  std::vector<std::uint8_t> adapt_mask; // 2 d_feat over (gamma || beta)

  /// All-zero parameters with gamma = 1 and every affine entry adaptable.
  static ToyClassifier zeros(const ModelDims& dims) {
    if (dims.d_in == 0 || dims.d_feat == 0 || dims.classes < 2) {
      throw std::invalid_argument("model needs d_in >= 1, d_feat >= 1, classes >= 2");
    }
    ToyClassifier m;
    m.dims = dims;
    m.feature_weights.assign(dims.d_feat * dims.d_in, 0.0);
    m.feature_bias.assign(dims.d_feat, 0.0);
    m.gamma.assign(dims.d_feat, 1.0);
    m.beta.assign(dims.d_feat, 0.0);
    m.head_weights.assign(dims.classes * dims.d_feat, 0.0);
    m.head_bias.assign(dims.classes, 0.0);
    m.adapt_mask.assign(2 * dims.d_feat, 1);
    return m;
  }

  /// Seeded Gaussian initialization. `feature_std` sets the spread of the frozen
  /// projection W; the head starts at N(0, 1/d_feat).
  static ToyClassifier random(const ModelDims& dims, std::uint64_t seed, double feature_std) {
    ToyClassifier m = zeros(dims);
    m.seed = seed;
    SplitMix64 rng(seed);
    for (double& w : m.feature_weights) w = rng.gaussian(0.0, feature_std);
    for (double& b : m.feature_bias) b = rng.gaussian(0.0, 1.0);
    const double head_std = 1.0 / std::sqrt(static_cast<double>(dims.d_feat));
    for (double& v : m.head_weights) v = rng.gaussian(0.0, head_std);
    return m;
  }

  void validate() const {
    const auto& d = dims;
    if (d.d_in == 0 || d.d_feat == 0 || d.classes < 2) throw std::invalid_argument("invalid model dimensions");
    if (feature_weights.size() != d.d_feat * d.d_in || feature_bias.size() != d.d_feat ||
        gamma.size() != d.d_feat || beta.size() != d.d_feat || head_weights.size() != d.classes * d.d_feat ||
        head_bias.size() != d.classes || adapt_mask.size() != 2 * d.d_feat) {
      throw std::invalid_argument("model parameter arrays do not match dimensions");
    }
  }

  [[nodiscard]] std::size_t affine_size() const { return 2 * dims.d_feat; }

  // Index i < d_feat addresses gamma[i], otherwise beta[i - d_feat].
  double& affine(std::size_t i) { return i < dims.d_feat ? gamma[i] : beta[i - dims.d_feat]; }
  [[nodiscard]] double affine(std::size_t i) const { return i < dims.d_feat ? gamma[i] : beta[i - dims.d_feat]; }

  [[nodiscard]] std::vector<std::size_t> masked_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < adapt_mask.size(); ++i) {
      if (adapt_mask[i]) idx.push_back(i);
    }
    return idx;
  }

  /// Freezes the beta half of the affine parameters.
  void freeze_beta() { std::fill(adapt_mask.begin() + static_cast<std::ptrdiff_t>(dims.d_feat), adapt_mask.end(), 0); }

  bool operator==(const ToyClassifier&) const = default;
};

struct ForwardResult {
  std::vector<double> hidden;  // h
  std::vector<double> logits;
  std::vector<double> probs;
};

/// Max-subtracted softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - mx);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

inline ForwardResult forward(const ToyClassifier& m, std::span<const double> x) {
  const auto& d = m.dims;
  if (x.size() != d.d_in) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) + ", model expects " +
                                std::to_string(d.d_in));
  }
  ForwardResult r;
  r.hidden.resize(d.d_feat);
  for (std::size_t j = 0; j < d.d_feat; ++j) {
    double a = m.feature_bias[j];
    for (std::size_t i = 0; i < d.d_in; ++i) a += m.feature_weights[j * d.d_in + i] * x[i];
    r.hidden[j] = std::tanh(a);
  }
  r.logits.resize(d.classes);
  for (std::size_t k = 0; k < d.classes; ++k) {
    double s = m.head_bias[k];
    for (std::size_t j = 0; j < d.d_feat; ++j) {
      s += m.head_weights[k * d.d_feat + j] * (m.gamma[j] * r.hidden[j] + m.beta[j]);
    }
    r.logits[k] = s;
  }
  r.probs = softmax(r.logits);
  return r;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

inline std::size_t predict(const ToyClassifier& m, std::span<const double> x) { return argmax(forward(m, x).probs); }

struct EntropyGrad {
  double loss = 0.0;
  std::vector<double> grad;  // one entry per masked affine parameter, in index order
  ForwardResult fwd;
};

/// Entropy of the prediction and its gradient w.r.t. the masked (gamma, beta).
///
/// dH/dlogit_k = -p_k (ln p_k + H), then back through the frozen head.
inline EntropyGrad entropy_loss_and_grad(const ToyClassifier& m, std::span<const double> x) {
  EntropyGrad out;
  out.fwd = forward(m, x);
  const auto& p = out.fwd.probs;
  const auto& d = m.dims;
  out.loss = entropy(p);

  std::vector<double> dlogit(d.classes);
  for (std::size_t k = 0; k < d.classes; ++k) {
    dlogit[k] = p[k] > 0.0 ? -p[k] * (std::log(p[k]) + out.loss) : 0.0;
  }
  for (std::size_t i = 0; i < m.adapt_mask.size(); ++i) {
    if (!m.adapt_mask[i]) continue;
    const std::size_t j = i < d.d_feat ? i : i - d.d_feat;
    double dz = 0.0;
    for (std::size_t k = 0; k < d.classes; ++k) dz += m.head_weights[k * d.d_feat + j] * dlogit[k];
    out.grad.push_back(i < d.d_feat ? dz * out.fwd.hidden[j] : dz);
  }
  return out;
}

inline double accuracy(const ToyClassifier& m, const LabeledSamples& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : data) correct += predict(m, s.x) == s.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

struct PretrainConfig {
  std::size_t epochs = 50;
  double lr = 0.1;
  std::uint64_t seed = 7;
  double accuracy_floor = 0.9;
};

struct PretrainReport {
  double initial_accuracy = 0.0;
  double accuracy = 0.0;
  std::size_t epochs = 0;
  bool converged = false;
};

/// Cross-entropy SGD (batch size one) over feature bias, gamma, beta and the
/// head. The frozen projection W is never touched. Non-convergence is
/// reported through `converged`, not thrown.
inline PretrainReport pretrain(ToyClassifier& m, const LabeledSamples& data, const PretrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("pretraining set is empty");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("pretraining learning rate must be positive");
  m.validate();
  const auto& d = m.dims;
  for (const auto& s : data) {
    if (s.x.size() != d.d_in) throw std::invalid_argument("pretraining sample dimension mismatch");
    if (s.label >= d.classes) throw std::invalid_argument("pretraining label out of range");
  }

  PretrainReport rep;
  rep.initial_accuracy = accuracy(m, data);
  SplitMix64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dlogit(d.classes), z(d.d_feat);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t idx : order) {
      const auto& s = data[idx];
      const auto f = forward(m, s.x);
      for (std::size_t k = 0; k < d.classes; ++k) dlogit[k] = f.probs[k] - (k == s.label ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d.d_feat; ++j) z[j] = m.gamma[j] * f.hidden[j] + m.beta[j];

      for (std::size_t j = 0; j < d.d_feat; ++j) {
        double dz = 0.0;
        for (std::size_t k = 0; k < d.classes; ++k) dz += m.head_weights[k * d.d_feat + j] * dlogit[k];
        const double h = f.hidden[j];
        const double da = dz * m.gamma[j] * (1.0 - h * h);
        m.gamma[j] -= cfg.lr * dz * h;
        m.beta[j] -= cfg.lr * dz;
        m.feature_bias[j] -= cfg.lr * da;
      }
      for (std::size_t k = 0; k < d.classes; ++k) {
        for (std::size_t j = 0; j < d.d_feat; ++j) m.head_weights[k * d.d_feat + j] -= cfg.lr * dlogit[k] * z[j];
        m.head_bias[k] -= cfg.lr * dlogit[k];
      }
    }
    ++rep.epochs;
  }
  rep.accuracy = accuracy(m, data);
  rep.converged = rep.accuracy >= cfg.accuracy_floor;
  return rep;
}

}  // namespace realm
