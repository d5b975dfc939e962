#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "realm/data.hpp"
#include "realm/experiment.hpp"
#include "realm/model.hpp"

using namespace realm;

namespace {

std::vector<std::size_t> label_counts(const LabeledSamples& s, std::size_t k) {
  std::vector<std::size_t> c(k, 0);
  for (const auto& x : s) ++c[x.label];
  return c;
}

LabeledSamples parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

}  // namespace

TEST(SplitMix64, ReferenceValues) {
  // First outputs for seed 0, as published with the reference implementation.
  SplitMix64 g(0);
  EXPECT_EQ(g.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(g.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(g.next(), 0x06C45D188009454FULL);
}

TEST(SplitMix64, BelowStaysInRange) {
  SplitMix64 g(5);
  for (int i = 0; i < 10000; ++i) ASSERT_LT(g.below(7), 7u);
}

TEST(SplitMix64, GaussianMoments) {
  SplitMix64 g(1);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = g.gaussian();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(MakeBlobs, DeterministicAndBalanced) {
  SyntheticShift shift;
  const auto a = make_blobs(shift);
  const auto b = make_blobs(shift);
  EXPECT_EQ(to_csv(a.source), to_csv(b.source));
  EXPECT_EQ(to_csv(a.target_clean), to_csv(b.target_clean));
  EXPECT_EQ(a.source.size(), shift.n_source);
  EXPECT_EQ(a.target_clean.size(), shift.n_target);
  const auto c = label_counts(a.source, 3);
  const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
  EXPECT_LE(*hi - *lo, 1u);
}

TEST(MakeBlobs, ClusterMeansOnCircle) {
  SyntheticShift shift;
  shift.n_source = 30000;
  const auto d = make_blobs(shift);
  for (std::size_t k = 0; k < 3; ++k) {
    double mx = 0, my = 0;
    std::size_t n = 0;
    for (const auto& s : d.source) {
      if (s.label != k) continue;
      mx += s.x[0];
      my += s.x[1];
      ++n;
    }
    EXPECT_NEAR(std::hypot(mx / n, my / n), shift.blob_separation, 0.05);
  }
}

TEST(MakeBlobs, SeparationSixPretrainsAboveFloor) {
  RunConfig cfg;
  cfg.separation = 6.0;
  EXPECT_GE(build_pretrained_model(cfg).report.accuracy, 0.95);
}

TEST(MakeBlobs, ZeroSeparationIsChanceLevel) {
  RunConfig cfg;
  cfg.separation = 0.0;
  auto shift = cfg.shift();
  const auto data = make_blobs(shift);
  auto m = ToyClassifier::random(cfg.dims(), 3, cfg.init_feature_std);
  pretrain(m, data.source, {20, 0.1, 3, 0.9});
  EXPECT_NEAR(accuracy(m, data.heldout_clean), 1.0 / 3.0, 0.06);
}

TEST(MakeBlobs, RejectsInvalidShift) {
  SyntheticShift s;
  s.severity = 6;
  EXPECT_THROW(make_blobs(s), std::invalid_argument);
  s.severity = 3;
  s.n_target = 0;
  EXPECT_THROW(make_blobs(s), std::invalid_argument);
  s.n_target = 10;
  s.blob_separation = -1.0;
  EXPECT_THROW(make_blobs(s), std::invalid_argument);
}

TEST(Corrupt, ZeroNoiseHookIsIdentity) {
  const auto src = make_blobs(SyntheticShift{}).target_clean;
  EXPECT_EQ(to_csv(add_gaussian_noise(src, 0.0, 9)), to_csv(src));
}

TEST(Corrupt, DeterministicAndLabelPreserving) {
  const auto src = make_blobs(SyntheticShift{}).target_clean;
  for (auto c : {Corruption::kGaussianNoise, Corruption::kFeatureScale, Corruption::kFeatureDropout}) {
    const auto a = corrupt(src, c, 3, 42);
    const auto b = corrupt(src, c, 3, 42);
    EXPECT_EQ(to_csv(a), to_csv(b)) << to_string(c);
    ASSERT_EQ(a.size(), src.size());
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i].label, src[i].label);
  }
}

TEST(Corrupt, NoiseVarianceMatchesSeverity) {
  SyntheticShift shift;
  shift.n_target = 20000;
  const auto src = make_blobs(shift).target_clean;
  const auto out = corrupt(src, Corruption::kGaussianNoise, 4, 1);
  double s2 = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double d = out[i].x[0] - src[i].x[0];
    s2 += d * d;
  }
  EXPECT_NEAR(std::sqrt(s2 / src.size()), 1.6, 0.03);
}

TEST(Corrupt, FeatureScaleTouchesHalfTheDims) {
  LabeledSamples s = {{{1.0, 1.0, 1.0, 1.0}, 0}};
  const auto out = corrupt(s, Corruption::kFeatureScale, 2, 3);
  const auto scaled = std::count(out[0].x.begin(), out[0].x.end(), 1.6);
  EXPECT_EQ(scaled, 2);
  EXPECT_EQ(std::count(out[0].x.begin(), out[0].x.end(), 1.0), 2);
}

TEST(Corrupt, DropoutRateMatchesSeverity) {
  LabeledSamples s(5000, {{1.0, 1.0, 1.0, 1.0}, 0});
  const auto out = corrupt(s, Corruption::kFeatureDropout, 3, 3);
  std::size_t zeros = 0;
  for (const auto& x : out) zeros += std::count(x.x.begin(), x.x.end(), 0.0);
  EXPECT_NEAR(static_cast<double>(zeros) / 20000.0, 0.3, 0.015);
}

TEST(Corrupt, Errors) {
  EXPECT_THROW(parse_corruption("fog"), std::invalid_argument);
  EXPECT_THROW(corrupt({}, Corruption::kGaussianNoise, 0, 1), std::invalid_argument);
}

TEST(Corrupt, NoAdaptAccuracyDeclinesWithSeverity) {
  RunConfig cfg;
  const auto model = build_pretrained_model(cfg).model;
  double prev = 1.0;
  for (int sev = 1; sev <= 5; ++sev) {
    cfg.severity = sev;
    const auto t = build_target(cfg);
    const double acc = accuracy(model, t.heldout);
    EXPECT_LE(acc, prev + 0.01) << "severity " << sev;
    prev = acc;
  }
  EXPECT_GT(prev, 1.0 / 3.0);
}

TEST(ShuffleStream, DeterministicBijection) {
  const auto src = make_blobs(SyntheticShift{}).source;
  const auto a = shuffle_stream(src, 5);
  const auto b = shuffle_stream(src, 5);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  auto orig = src;
  std::vector<std::vector<double>> xs;
  for (const auto& s : orig) xs.push_back(s.x);
  auto shuffled = a.inputs;
  std::sort(xs.begin(), xs.end());
  std::sort(shuffled.begin(), shuffled.end());
  EXPECT_EQ(xs, shuffled);
}

TEST(ShuffleStream, SeedsGiveDifferentOrders) {
  LabeledSamples s;
  for (std::size_t i = 0; i < 12; ++i) s.push_back({{static_cast<double>(i)}, 0});
  EXPECT_NE(shuffle_stream(s, 1).inputs, shuffle_stream(s, 2).inputs);
  EXPECT_THROW(shuffle_stream({}, 1), std::invalid_argument);
  EXPECT_FALSE(shuffle_stream(s, 1, false).has_labels());
}

TEST(Csv, WellFormed) {
  const auto s = parse("x0,x1,label\n1.5,2,0\n-3e-2,4,1\n0,0,2\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].x, (std::vector<double>{-0.03, 4.0}));
  EXPECT_EQ(s[2].label, 2u);
}

TEST(Csv, LabelColumnAnywhere) {
  const auto s = parse("label,a,b\n1,0.5,0.25\n");
  EXPECT_EQ(s[0].label, 1u);
  EXPECT_EQ(s[0].x, (std::vector<double>{0.5, 0.25}));
}

TEST(Csv, StructuredErrors) {
  try {
    parse("x0,x1\n1,2\n");
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    parse("x0,label\n1,0\n1,2,3\n");
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("x0,label\nnan,0\n"), CsvError);
  EXPECT_THROW(parse("x0,label\ninf,0\n"), CsvError);
  EXPECT_THROW(parse("x0,label\nabc,0\n"), CsvError);
  EXPECT_THROW(parse("x0,label\n1,-1\n"), CsvError);
  EXPECT_THROW(parse("x0,label\n1,1.5\n"), CsvError);
  EXPECT_THROW(parse("label,label\n1,1\n"), CsvError);
  EXPECT_THROW(parse("label\n1\n"), CsvError);
  EXPECT_THROW(parse(""), CsvError);
}

TEST(Csv, RoundTripIsBitExact) {
  const auto src = corrupt(make_blobs(SyntheticShift{}).source, Corruption::kGaussianNoise, 5, 3);
  const auto path = std::filesystem::temp_directory_path() / "realm_roundtrip.csv";
  write_csv(path.string(), src);
  const auto back = load_csv(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    ASSERT_EQ(back[i].label, src[i].label);
    for (std::size_t j = 0; j < src[i].x.size(); ++j) ASSERT_EQ(back[i].x[j], src[i].x[j]);
  }
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}
