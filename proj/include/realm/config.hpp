#pragma once

// Flat `key = value` run configuration. Every key has a default; unknown keys
// are errors. Values set to `auto` are derived from other keys when resolved.

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "realm/adapt.hpp"
#include "realm/data.hpp"
#include "realm/model.hpp"

namespace realm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // data
  std::size_t classes = 3;
  std::size_t d_in = 2;
  std::size_t n_source = 600;
  std::size_t n_target = 2000;
  std::size_t n_heldout = 1000;
  double separation = 4.0;
  std::string corruption = "gaussian_noise";
  int severity = 5;
  std::uint64_t seed = 7;
  std::string source_csv;
  std::string target_csv;
  // model
  std::size_t d_feat = 32;
  double init_feature_std = 0.25;
  std::size_t pretrain_epochs = 50;
  double pretrain_lr = 0.1;
  double accuracy_floor = 0.9;
  bool freeze_beta = false;
  // strategy
  std::string strategy = "realm";
  bool use_squared = false;
  bool use_scale_factor = false;
  bool use_div_gate = true;
  // optimizer
  double lr_theta = 0.005;
  double momentum = 0.9;
  std::optional<double> lr_alpha_lambda;  // auto: 2 * lr_theta
  // robust loss
  double alpha0 = 0.15;
  std::optional<double> lambda0;  // auto: 0.4 * ln(classes)
  double scale_c = 1.0;
  // diversity gate
  double ema_decay = 0.9;
  double d = 0.4;
  // collapse detector
  std::size_t collapse_window = 200;
  double collapse_frac = 0.9;
  // output
  std::string out = "out";

  [[nodiscard]] double resolved_lambda0() const {
    return lambda0 ? *lambda0 : 0.4 * std::log(static_cast<double>(classes));
  }
  [[nodiscard]] double resolved_lr_alpha_lambda() const {
    return lr_alpha_lambda ? *lr_alpha_lambda : 2.0 * lr_theta;
  }

  [[nodiscard]] SyntheticShift shift() const {
    SyntheticShift s;
    s.classes = classes;
    s.d_in = d_in;
    s.n_source = n_source;
    s.n_target = n_target;
    s.n_heldout = n_heldout;
    s.blob_separation = separation;
    s.corruption = parse_corruption(corruption);
    s.severity = severity;
    s.seed = seed;
    return s;
  }

  [[nodiscard]] ModelDims dims() const { return {d_in, d_feat, classes}; }

  [[nodiscard]] EngineConfig engine() const {
    EngineConfig e;
    e.strategy = {parse_strategy(strategy), use_squared, use_scale_factor, use_div_gate};
    e.optimizer = {lr_theta, momentum, resolved_lr_alpha_lambda()};
    e.initial = {alpha0, resolved_lambda0(), scale_c};
    e.ema_decay = ema_decay;
    e.div_threshold = d;
    return e;
  }

  /// Throws ConfigError describing the first invalid or conflicting setting.
  void validate() const {
    try {
      shift().validate();
      ToyClassifier::zeros(dims());
      auto e = engine();
      e.strategy.validate();
      e.optimizer.validate();
      e.initial.validate();
      EmaTracker(ema_decay, d);
      if (collapse_window < 10) throw std::invalid_argument("collapse_window must be at least 10");
      if (!(collapse_frac > 0.0 && collapse_frac <= 1.0)) throw std::invalid_argument("collapse_frac must lie in (0, 1]");
      if (!(pretrain_lr > 0.0)) throw std::invalid_argument("pretrain_lr must be positive");
      if (!(init_feature_std > 0.0)) throw std::invalid_argument("init_feature_std must be positive");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(ex.what());
    }
  }

  void set(const std::string& key, const std::string& value);
  [[nodiscard]] std::string get(const std::string& key) const;
  [[nodiscard]] static const std::vector<std::string>& keys();
  [[nodiscard]] std::string serialize() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a finite number");
  }
  return d;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is out of range");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

inline std::string show(double v) { return shortest_double(v); }
inline std::string show(bool v) { return v ? "true" : "false"; }

struct ConfigField {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
ConfigField field(const char* key, T RunConfig::*member) {
  ConfigField f;
  f.key = key;
  f.set = [key, member](RunConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, bool>) {
      c.*member = parse_bool(key, v);
    } else if constexpr (std::is_same_v<T, double>) {
      c.*member = parse_double(key, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      c.*member = v;
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (v == "auto") {
        (c.*member).reset();
      } else {
        c.*member = parse_double(key, v);
      }
    } else {
      c.*member = static_cast<T>(parse_uint(key, v));
    }
  };
  f.get = [member](const RunConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, double>) {
      return show(c.*member);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return c.*member;
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      return (c.*member) ? show(*(c.*member)) : std::string("auto");
    } else {
      return std::to_string(c.*member);
    }
  };
  return f;
}

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      field("classes", &RunConfig::classes),
      field("d_in", &RunConfig::d_in),
      field("n_source", &RunConfig::n_source),
      field("n_target", &RunConfig::n_target),
      field("n_heldout", &RunConfig::n_heldout),
      field("separation", &RunConfig::separation),
      field("corruption", &RunConfig::corruption),
      field("severity", &RunConfig::severity),
      field("seed", &RunConfig::seed),
      field("source_csv", &RunConfig::source_csv),
      field("target_csv", &RunConfig::target_csv),
      field("d_feat", &RunConfig::d_feat),
      field("init_feature_std", &RunConfig::init_feature_std),
      field("pretrain_epochs", &RunConfig::pretrain_epochs),
      field("pretrain_lr", &RunConfig::pretrain_lr),
      field("accuracy_floor", &RunConfig::accuracy_floor),
      field("freeze_beta", &RunConfig::freeze_beta),
      field("strategy", &RunConfig::strategy),
      field("use_squared", &RunConfig::use_squared),
      field("use_scale_factor", &RunConfig::use_scale_factor),
      field("use_div_gate", &RunConfig::use_div_gate),
      field("lr_theta", &RunConfig::lr_theta),
      field("momentum", &RunConfig::momentum),
      field("lr_alpha_lambda", &RunConfig::lr_alpha_lambda),
      field("alpha0", &RunConfig::alpha0),
      field("lambda0", &RunConfig::lambda0),
      field("scale_c", &RunConfig::scale_c),
      field("ema_decay", &RunConfig::ema_decay),
      field("d", &RunConfig::d),
      field("collapse_window", &RunConfig::collapse_window),
      field("collapse_frac", &RunConfig::collapse_frac),
      field("out", &RunConfig::out),
  };
  return fields;
}

inline const ConfigField& find_field(const std::string& key) {
  for (const auto& f : config_fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
  detail::find_field(key).set(*this, detail::trim(value));
}

inline std::string RunConfig::get(const std::string& key) const { return detail::find_field(key).get(*this); }

inline const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : detail::config_fields()) out.push_back(f.key);
    return out;
  }();
  return k;
}

inline std::string RunConfig::serialize() const {
  std::ostringstream os;
  for (const auto& f : detail::config_fields()) os << f.key << " = " << f.get(*this) << '\n';
  return os.str();
}

/// Applies `key = value` lines on top of `base`. `#` starts a comment.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = detail::trim(line.substr(0, eq));
    try {
      base.set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  return parse_config(in, std::move(base));
}

}  // namespace realm
