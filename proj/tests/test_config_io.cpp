#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "realm/config.hpp"
#include "realm/experiment.hpp"
#include "realm/io.hpp"

using namespace realm;

TEST(RunConfig, DefaultsResolve) {
  const RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.resolved_lambda0(), 0.4 * std::log(3.0));
  EXPECT_DOUBLE_EQ(c.resolved_lr_alpha_lambda(), 2.0 * c.lr_theta);
  EXPECT_EQ(c.get("lambda0"), "auto");
  EXPECT_EQ(RunConfig::keys().size(), 32u);
}

TEST(RunConfig, ParseWithCommentsAndOverrides) {
  const auto c = parse_config("# header\nstrategy = tent   # inline\n\nlr_theta=0.25\nlambda0 = 0.5\n");
  EXPECT_EQ(c.strategy, "tent");
  EXPECT_EQ(c.lr_theta, 0.25);
  EXPECT_EQ(c.resolved_lambda0(), 0.5);
  EXPECT_EQ(c.resolved_lr_alpha_lambda(), 0.5);
}

TEST(RunConfig, UnknownKeyIsAnError) {
  EXPECT_THROW(parse_config("learning_rate = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
  EXPECT_THROW(parse_config("severity = high\n"), ConfigError);
  EXPECT_THROW(parse_config("use_squared = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = -1\n"), ConfigError);
}

TEST(RunConfig, ValidationCatchesConflicts) {
  EXPECT_THROW(parse_config("strategy = tent\nuse_squared = true\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("strategy = eata\nuse_div_gate = false\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("severity = 9\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("corruption = fog\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("momentum = 1\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("alpha0 = 0\n").validate(), ConfigError);
}

TEST(RunConfig, SerializeRoundTripIsIdempotent) {
  auto c = parse_config("strategy = eata\nlambda0 = 0.33\nseed = 19\nseparation = 5.5\nfreeze_beta = true\n");
  const auto once = c.serialize();
  const auto back = parse_config(once);
  EXPECT_EQ(back.serialize(), once);
  EXPECT_EQ(parse_config(back.serialize()).serialize(), once);
  EXPECT_EQ(parse_config(RunConfig{}.serialize()).serialize(), RunConfig{}.serialize());
}

TEST(StepCsv, ExactHeaderAndEmptyTruth) {
  StepRecord r;
  r.step = 3;
  r.raw_entropy = 0.5;
  r.pred = 2;
  r.updated = true;
  r.weight = 1.0;
  const auto csv = steps_csv({r});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,raw_entropy,effective_loss,weight,s_div,pred,truth,updated,alpha,lambda,anomaly");
  EXPECT_NE(csv.find("\n3,0.5,0,1,0,2,,1,0,0,0\n"), std::string::npos);
}

TEST(ModelJson, RoundTripIsExact) {
  RunConfig cfg;
  cfg.pretrain_epochs = 3;
  auto m = build_pretrained_model(cfg).model;
  m.freeze_beta();
  const auto path = std::filesystem::temp_directory_path() / "realm_model.json";
  save_model(path, m);
  const auto back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back, m);
}

TEST(ModelJson, MalformedDocumentsAreRejected) {
  auto j = model_json(ToyClassifier::zeros({2, 4, 3}));
  j["gamma"] = std::vector<double>{1.0};
  EXPECT_THROW(model_from_json(j), std::invalid_argument);
  auto k = model_json(ToyClassifier::zeros({2, 4, 3}));
  k.erase("head_bias");
  EXPECT_THROW(model_from_json(k), std::invalid_argument);
}

TEST(EquivalenceJson, Fields) {
  const auto j = equivalence_json(equivalence_check({0.0, 1.0}, {1.0}));
  EXPECT_EQ(j["t_count"], 2);
  EXPECT_EQ(j["alpha_count"], 1);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_TRUE(j.contains("max_value_dev"));
  EXPECT_TRUE(j.contains("max_w_dev"));
}

TEST(SummaryJson, CarriesRequiredFields) {
  RunConfig cfg;
  cfg.n_target = 300;
  const auto r = run_experiment(cfg);
  const auto j = summary_json(r.run.summary, r.heldout_accuracy);
  for (const char* key : {"strategy", "final_accuracy", "updates", "collapsed", "final_alpha", "final_lambda"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["strategy"], "realm");
}

TEST(Manifest, ContainsResolvedConfigAndVersion) {
  const auto j = manifest_json("adapt", RunConfig{});
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_EQ(j["config"]["strategy"], "realm");
  EXPECT_DOUBLE_EQ(j["config"]["resolved_lambda0"].get<double>(), 0.4 * std::log(3.0));
}
