// realm: pretrain / adapt / sweep / check front end.
//
// Exit codes: 0 success, 1 check failure, 2 config error, 3 runtime or I/O error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "realm/check.hpp"
#include "realm/config.hpp"
#include "realm/experiment.hpp"
#include "realm/io.hpp"

namespace fs = std::filesystem;
using namespace realm;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

const std::vector<std::string> kSweepAxes = {"lr_alpha_lambda", "severity", "n_target", "d",
                                             "alpha0",          "lambda0",  "strategy"};

struct ConfigArgs {
  std::string config_file;
  std::map<std::string, std::string> overrides;
};

void add_config_options(CLI::App* app, ConfigArgs& args) {
  app->add_option("--config", args.config_file, "key = value config file")->check(CLI::ExistingFile);
  for (const auto& key : RunConfig::keys()) {
    app->add_option_function<std::string>(
           "--" + key, [&args, key](const std::string& v) { args.overrides[key] = v; },
           "override (default " + RunConfig{}.get(key) + ")")
        ->group("Config keys");
  }
}

RunConfig resolve_config(const ConfigArgs& args) {
  RunConfig cfg;
  if (!args.config_file.empty()) {
    std::ifstream in(args.config_file);
    if (!in) throw ConfigError("cannot read config file " + args.config_file);
    cfg = parse_config(in);
  }
  for (const auto& [k, v] : args.overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path out(cfg.out);
  fs::create_directories(out);
  return out;
}

void write_run(const fs::path& dir, const ExperimentResult& r) {
  fs::create_directories(dir);
  write_text(dir / "steps.csv", steps_csv(r.run.records));
  write_text(dir / "online_accuracy.csv", online_accuracy_csv(r.run.summary));
  write_json(dir / "summary.json", summary_json(r.run.summary, r.heldout_accuracy));
}

std::string describe(const ExperimentResult& r) {
  const auto& s = r.run.summary;
  std::ostringstream os;
  os << s.strategy << ": steps " << s.steps << ", updates " << s.updates;
  if (s.final_accuracy) os << ", online accuracy " << shortest_double(*s.final_accuracy);
  if (r.heldout_accuracy) os << ", held-out accuracy " << shortest_double(*r.heldout_accuracy);
  os << ", collapsed " << (s.collapse.collapsed ? "yes" : "no");
  return os.str();
}

int cmd_pretrain(const RunConfig& cfg, bool write_data) {
  const auto out = prepare_out(cfg);
  const auto prepared = build_pretrained_model(cfg);
  save_model(out / "model.json", prepared.model);
  write_json(out / "pretrain_report.json", pretrain_json(prepared.report, cfg.seed));
  write_json(out / "manifest.json", manifest_json("pretrain", cfg));

  if (cfg.source_csv.empty() && cfg.target_csv.empty()) {
    const auto source = source_samples(cfg);
    const auto target = build_target(cfg);
    LabeledSamples stream_samples;
    for (std::size_t i = 0; i < target.stream.size(); ++i) {
      stream_samples.push_back({target.stream.inputs[i], target.stream.labels[i]});
    }
    write_json(out / "dataset_manifest.json",
               dataset_manifest_json(cfg.shift(), source, stream_samples, target.heldout));
    if (write_data) {
      write_csv((out / "source.csv").string(), source);
      write_csv((out / "target.csv").string(), stream_samples);
      write_csv((out / "heldout.csv").string(), target.heldout);
    }
  }
  std::cout << "source accuracy " << shortest_double(prepared.report.accuracy) << " (seed " << cfg.seed << ")"
            << (prepared.report.converged ? "" : " below accuracy_floor") << '\n';
  return 0;
}

int cmd_adapt(const RunConfig& cfg, const std::string& model_file) {
  const auto out = prepare_out(cfg);
  ToyClassifier model;
  if (model_file.empty()) {
    model = build_pretrained_model(cfg).model;
  } else {
    try {
      model = load_model(model_file);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(model_file + ": " + e.what());
    }
    if (!(model.dims == cfg.dims())) throw ConfigError("model dimensions do not match the config");
  }
  const auto r = run_adaptation(cfg, std::move(model), build_target(cfg));
  write_run(out, r);
  save_model(out / "model_adapted.json", r.final_model);
  write_json(out / "manifest.json", manifest_json("adapt", cfg));
  std::cout << describe(r) << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& base, const std::string& axis, std::vector<std::string> values) {
  if (std::find(kSweepAxes.begin(), kSweepAxes.end(), axis) == kSweepAxes.end()) {
    throw ConfigError("'" + axis + "' is not a sweepable key");
  }
  if (values.empty()) throw ConfigError("sweep needs at least one value");

  std::vector<std::pair<std::string, RunConfig>> runs;
  for (const auto& v : values) {
    RunConfig cfg = base;
    cfg.set(axis, v);
    cfg.validate();
    runs.emplace_back(cfg.get(axis), cfg);
  }
  // Numeric axes sort by resolved value so that `auto` lands where it resolves.
  const auto sort_key = [&axis](const RunConfig& c) {
    if (axis == "lambda0") return c.resolved_lambda0();
    if (axis == "lr_alpha_lambda") return c.resolved_lr_alpha_lambda();
    return std::stod(c.get(axis));
  };
  if (axis == "strategy") {
    std::stable_sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  } else {
    std::stable_sort(runs.begin(), runs.end(),
                     [&](const auto& a, const auto& b) { return sort_key(a.second) < sort_key(b.second); });
  }

  const auto out = prepare_out(base);
  std::vector<std::future<ExperimentResult>> jobs;
  for (const auto& [v, cfg] : runs) {
    jobs.push_back(std::async(std::launch::async, [c = cfg] { return run_experiment(c); }));
  }

  std::ostringstream agg;
  agg << axis << ",strategy,steps,updates,final_accuracy,heldout_accuracy,collapsed,final_alpha,final_lambda\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto r = jobs[i].get();
    const auto& s = r.run.summary;
    write_run(out / (axis + "_" + runs[i].first), r);
    agg << runs[i].first << ',' << s.strategy << ',' << s.steps << ',' << s.updates << ','
        << (s.final_accuracy ? format_double(*s.final_accuracy) : "") << ','
        << (r.heldout_accuracy ? format_double(*r.heldout_accuracy) : "") << ',' << (s.collapse.collapsed ? 1 : 0)
        << ',' << format_double(s.final_alpha) << ',' << format_double(s.final_lambda) << '\n';
    std::cout << axis << '=' << runs[i].first << "  " << describe(r) << '\n';
  }
  write_text(out / ("sweep_" + axis + ".csv"), agg.str());

  auto manifest = manifest_json("sweep", base);
  manifest["axis"] = axis;
  std::vector<std::string> sorted;
  for (const auto& [v, c] : runs) sorted.push_back(v);
  manifest["values"] = sorted;
  write_json(out / "manifest.json", manifest);
  return 0;
}

int cmd_check() {
  const auto rep = run_checks();
  print_report(std::cout, rep);
  return rep.pass() ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust entropy adaptive loss minimization: online test-time adaptation harness"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  ConfigArgs pre_args, adapt_args, sweep_args;
  bool write_data = false;
  std::string model_file, axis;
  std::vector<std::string> values;

  auto* pre = app.add_subcommand("pretrain", "train the source model and write model.json");
  add_config_options(pre, pre_args);
  pre->add_flag("--write-data", write_data, "also write source/target/heldout CSVs");

  auto* adapt = app.add_subcommand("adapt", "run one adaptation stream");
  add_config_options(adapt, adapt_args);
  adapt->add_option("--model", model_file, "model JSON from `pretrain` (default: pretrain in-process)");

  auto* sweep = app.add_subcommand("sweep", "one independent run per value of a config key");
  add_config_options(sweep, sweep_args);
  sweep->add_option("--axis", axis, "lr_alpha_lambda, severity, n_target, d, alpha0, lambda0 or strategy")->required();
  sweep->add_option("--values", values, "comma-separated values")->delimiter(',')->required();

  auto* check = app.add_subcommand("check", "run the math property suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*check) return cmd_check();
    if (*pre) return cmd_pretrain(resolve_config(pre_args), write_data);
    if (*adapt) return cmd_adapt(resolve_config(adapt_args), model_file);
    if (*sweep) return cmd_sweep(resolve_config(sweep_args), axis, values);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
