#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "avsal/metrics.hpp"
#include "temp_dir.hpp"

using namespace avsal;

namespace {

SaliencyMap random_saliency(std::size_t w, std::size_t h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  SaliencyMap m(w, h);
  for (auto& v : m) v = u(rng);
  return m;
}

// Mann-Whitney form of the ROC area: P(pos > neg) + P(pos == neg) / 2.
double pairwise_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double acc = 0.0;
  for (double p : pos) {
    for (double n : neg) acc += p > n ? 1.0 : p == n ? 0.5 : 0.0;
  }
  return acc / static_cast<double>(pos.size() * neg.size());
}

std::vector<PointF> two_points() { return {{4.0, 3.0}, {12.0, 9.0}}; }

}  // namespace

TEST(FixationDensity, PeakSymmetryAndMass) {
  const auto d = fixation_density({{10.0, 5.0}}, 40, 20, 2.0);
  EXPECT_FALSE(d.empty);
  EXPECT_EQ(std::max_element(d.values.begin(), d.values.end()) - d.values.begin(), 5 * 40 + 10);
  EXPECT_DOUBLE_EQ(d.values(9, 5), d.values(11, 5));
  EXPECT_DOUBLE_EQ(d.values(10, 3), d.values(10, 7));
  double sum = 0.0;
  for (double v : d.values) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_TRUE(fixation_density({}, 4, 4, 1.0).empty);
  EXPECT_THROW(fixation_density({}, 4, 4, 0.0), ParameterError);
}

TEST(RocAuc, MatchesPairwiseCount) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pos(5), neg(5);
    for (auto& v : pos) v = level(rng);
    for (auto& v : neg) v = level(rng);
    EXPECT_NEAR(roc_auc(pos, neg), pairwise_auc(pos, neg), 1e-12);
  }
  EXPECT_THROW(roc_auc({}, {1.0}), ParameterError);
}

TEST(Auc, IndicatorMapIsPerfect) {
  SaliencyMap sal(16, 12, 0.0f);
  const auto fix = two_points();
  for (const auto& f : fix) sal(static_cast<std::size_t>(f.x), static_cast<std::size_t>(f.y)) = 1.0f;
  EXPECT_DOUBLE_EQ(*auc(sal, fix), 1.0);
}

TEST(Auc, ConstantMapIsChance) { EXPECT_DOUBLE_EQ(*auc(SaliencyMap(16, 12, 0.3f), two_points()), 0.5); }

TEST(Auc, NegativesAreUnfixatedAndReproducible) {
  const std::vector<std::size_t> positives{3, 7, 7, 20};
  const auto reps = auc_negative_samples(25, positives, 4, 10, 99);
  ASSERT_EQ(reps.size(), 10u);
  for (const auto& r : reps) {
    ASSERT_EQ(r.size(), 4u);
    for (auto i : r) {
      EXPECT_LT(i, 25u);
      EXPECT_TRUE(i != 3 && i != 7 && i != 20);
    }
  }
  EXPECT_EQ(reps, auc_negative_samples(25, positives, 4, 10, 99));
}

TEST(Auc, AveragesRepetitionsOnFiveByFive) {
  const auto sal = random_saliency(5, 5, 8);
  const std::vector<PointF> fix{{1, 1}, {3, 2}, {4, 4}};
  const auto positives = fixation_pixels(fix, 5, 5);
  std::vector<double> pos;
  for (auto i : positives) pos.push_back(sal[i]);
  double expected = 0.0;
  const auto reps = auc_negative_samples(25, positives, 3, 10, 17);
  for (const auto& r : reps) {
    std::vector<double> neg;
    for (auto i : r) neg.push_back(sal[i]);
    expected += pairwise_auc(pos, neg);
  }
  EXPECT_NEAR(*auc(sal, fix, 10, 17), expected / 10.0, 1e-12);
  EXPECT_FALSE(auc(sal, {}).has_value());
}

TEST(KlDivergence, IdenticalMapsNearZero) {
  const auto d = fixation_density(two_points(), 16, 12, 1.5);
  SaliencyMap sal(16, 12);
  for (std::size_t i = 0; i < sal.size(); ++i) sal[i] = static_cast<float>(d.values[i]);
  EXPECT_NEAR(*kl_divergence(sal, d), 0.0, 1e-6);
}

TEST(KlDivergence, MatchesDirectSum) {
  const auto sal = random_saliency(16, 12, 2);
  const auto d = fixation_density(two_points(), 16, 12, 1.5);
  const double eps = 1e-12;
  double ssum = 0.0;
  for (float v : sal) ssum += v;
  std::vector<double> s(sal.size()), f(sal.size());
  double sn = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < sal.size(); ++i) {
    s[i] = sal[i] / ssum + eps;
    f[i] = d.values[i] + eps;
    sn += s[i];
    fn += f[i];
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < sal.size(); ++i) kl += (f[i] / fn) * std::log((f[i] / fn) / (s[i] / sn));
  EXPECT_NEAR(*kl_divergence(sal, d), kl, 1e-9);
  EXPECT_GT(kl, 0.0);
}

TEST(KlDivergence, NonNegative) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    EXPECT_GE(*kl_divergence(random_saliency(10, 8, seed), fixation_density({{2.0 + seed % 5, 3.0}}, 10, 8, 1.0)), -1e-12);
  }
  EXPECT_FALSE(kl_divergence(SaliencyMap(4, 4), fixation_density({}, 4, 4, 1.0)).has_value());
}

TEST(Nss, SinglePeak) {
  SaliencyMap sal(5, 5, 0.0f);
  sal(2, 2) = 1.0f;
  // mean 1/25, population std sqrt(0.04 * 0.96)
  const double z = (1.0 - 0.04) / std::sqrt(0.04 * 0.96);
  EXPECT_NEAR(*nss(sal, {{2.0, 2.0}}), z, 1e-9);
  EXPECT_NEAR(*nss(sal, {{0.0, 0.0}}), -0.04 / std::sqrt(0.04 * 0.96), 1e-9);
  EXPECT_NEAR(*nss(sal, {{2.0, 2.0}, {0.0, 0.0}}), 0.5 * (z - 0.04 / std::sqrt(0.04 * 0.96)), 1e-9);
  EXPECT_FALSE(nss(SaliencyMap(5, 5, 0.5f), {{1, 1}}).has_value());
  EXPECT_FALSE(nss(sal, {}).has_value());
}

TEST(Cc, PerfectAndInverted) {
  const auto d = fixation_density(two_points(), 16, 12, 2.0);
  SaliencyMap same(16, 12), inverted(16, 12);
  double mx = 0.0;
  for (double v : d.values) mx = std::max(mx, v);
  for (std::size_t i = 0; i < same.size(); ++i) {
    same[i] = static_cast<float>(d.values[i] / mx);
    inverted[i] = 1.0f - same[i];
  }
  EXPECT_NEAR(*cc(same, d), 1.0, 1e-6);
  EXPECT_NEAR(*cc(inverted, d), -1.0, 1e-6);
  EXPECT_FALSE(cc(SaliencyMap(16, 12, 0.2f), d).has_value());
}

TEST(Cc, MatchesCovarianceFormula) {
  const auto sal = random_saliency(16, 12, 6);
  const auto d = fixation_density(two_points(), 16, 12, 2.0);
  const double n = static_cast<double>(sal.size());
  double ms = 0.0, mf = 0.0;
  for (std::size_t i = 0; i < sal.size(); ++i) {
    ms += sal[i];
    mf += d.values[i];
  }
  ms /= n;
  mf /= n;
  double cov = 0.0, vs = 0.0, vf = 0.0;
  for (std::size_t i = 0; i < sal.size(); ++i) {
    cov += (sal[i] - ms) * (d.values[i] - mf);
    vs += (sal[i] - ms) * (sal[i] - ms);
    vf += (d.values[i] - mf) * (d.values[i] - mf);
  }
  EXPECT_NEAR(*cc(sal, d), cov / std::sqrt(vs * vf), 1e-9);
}

TEST(EvaluateVideo, FrameLimit) {
  const std::size_t frames = 500;
  std::vector<SaliencyMap> maps(frames, random_saliency(12, 10, 1));
  FixationSet fix;
  fix.frames.assign(frames, {{3.0, 4.0}});
  const auto r = evaluate_video(maps, fix);
  EXPECT_EQ(r.frames.size(), 300u);
  EXPECT_EQ(r.frames.back().frame, 299u);
  MetricConfig all;
  all.frame_limit = 0;
  EXPECT_EQ(evaluate_video(maps, fix, all).frames.size(), frames);
}

TEST(EvaluateVideo, FramesWithoutFixationsAreExcluded) {
  std::vector<SaliencyMap> maps{random_saliency(12, 10, 1), random_saliency(12, 10, 2), random_saliency(12, 10, 3)};
  FixationSet fix;
  fix.frames = {{{3.0, 4.0}}, {}, {{8.0, 2.0}, {1.0, 1.0}}};
  const auto r = evaluate_video(maps, fix);
  ASSERT_EQ(r.frames.size(), 3u);
  EXPECT_FALSE(r.frames[1].nss.has_value());
  EXPECT_FALSE(r.frames[1].auc.has_value());
  EXPECT_NEAR(*r.mean.nss, 0.5 * (*r.frames[0].nss + *r.frames[2].nss), 1e-12);
  EXPECT_NEAR(*r.mean.kl, 0.5 * (*r.frames[0].kl + *r.frames[2].kl), 1e-12);
  EXPECT_TRUE(r.diagnostics.empty());

  FixationSet none;
  const auto empty = evaluate_video(maps, none);
  EXPECT_TRUE(empty.empty());
  EXPECT_FALSE(empty.diagnostics.empty());
}

TEST(EvaluateFrame, SeedDependsOnFrame) {
  EXPECT_NE(frame_seed(1, 0), frame_seed(1, 1));
  EXPECT_EQ(frame_seed(5, 7), frame_seed(5, 7));
}

TEST(Reports, CsvAndJsonLayout) {
  TempDir dir;
  std::vector<SaliencyMap> maps{random_saliency(12, 10, 1), random_saliency(12, 10, 2)};
  FixationSet fix;
  fix.frames = {{{3.0, 4.0}}, {}};
  const auto r = evaluate_video(maps, fix, {}, "clip");
  write_report_csv({r}, dir / "m.csv");
  std::ifstream in(dir / "m.csv");
  std::string header, row0, row1, extra;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(header, "video,frame,auc,kl,nss,cc");
  EXPECT_EQ(row0.rfind("clip,0,", 0), 0u);
  EXPECT_EQ(row1, "clip,1,,,,");
  EXPECT_FALSE(std::getline(in, extra));

  write_report_json({r}, "avsal", dir / "m.json");
  const auto j = nlohmann::json::parse(std::ifstream(dir / "m.json"));
  EXPECT_EQ(j["method"], "avsal");
  EXPECT_EQ(j["videos"][0]["video"], "clip");
  EXPECT_EQ(j["videos"][0]["frames_evaluated"], 2);
  EXPECT_EQ(j["videos"][0]["frames_defined"], 1);
  EXPECT_NEAR(j["corpus"]["NSS"].get<double>(), *r.mean.nss, 1e-12);
  ASSERT_EQ(j["table"].size(), 4u);
  EXPECT_EQ(j["table"][0]["metric"], "AUC");
  EXPECT_NEAR(j["table"][0]["avsal"].get<double>(), *r.mean.auc, 1e-12);
}
