#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "avsal/visual_saliency.hpp"

using namespace avsal;

namespace {

DoubleGrid random_map(std::size_t w, std::size_t h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  DoubleGrid m(w, h);
  for (auto& v : m) v = u(rng);
  return m;
}

double kernel(std::size_t i, std::size_t j, std::size_t w, double sigma) {
  const double dx = double(i % w) - double(j % w), dy = double(i / w) - double(j / w);
  return std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
}

RgbImage dot_frame(std::size_t w, std::size_t h, int cx, int cy) {
  RgbImage img(w, h, Rgb{0, 0, 0});
  for (int y = cy - 2; y <= cy + 2; ++y) {
    for (int x = cx - 2; x <= cx + 2; ++x) img(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = {255, 255, 255};
  }
  return img;
}

}  // namespace

TEST(MarkovGraph, LogRatioTwoNodes) {
  DoubleGrid m(2, 1, std::vector<double>{std::numbers::e, 1.0});
  const auto g = build_markov_graph(m);
  // One neighbour each at dissimilarity |log e| = 1; self-loops carry nothing.
  EXPECT_NEAR(g(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(g(0, 1), 1.0, 1e-15);
  EXPECT_EQ(g(0, 0), 0.0);
}

TEST(MarkovGraph, MatchesDirectFormula) {
  const auto m = random_map(5, 4, 2);
  const auto g = build_markov_graph(m, 0.15);
  const double sigma = 0.15 * 5;
  for (std::size_t j = 0; j < m.size(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) col += std::abs(std::log(m[i] / m[j])) * kernel(i, j, 5, sigma);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_NEAR(g(i, j), std::abs(std::log(m[i] / m[j])) * kernel(i, j, 5, sigma) / col, 1e-12);
    }
  }
}

TEST(MarkovGraph, ConstantMapIsUniform) {
  const auto g = build_markov_graph(DoubleGrid(3, 3, 0.4));
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) EXPECT_DOUBLE_EQ(g(i, j), 1.0 / 9.0);
  }
}

TEST(MarkovGraph, ColumnStochastic) {
  for (unsigned s = 0; s < 5; ++s) {
    EXPECT_LT(build_markov_graph(random_map(8, 6, s)).stochasticity_error(), 1e-12);
    EXPECT_LT(concentration_graph(random_map(8, 6, s + 10)).stochasticity_error(), 1e-12);
  }
  DoubleGrid with_zero = random_map(6, 6, 3);
  with_zero[7] = 0.0;
  with_zero[8] = -0.5;
  EXPECT_LT(build_markov_graph(with_zero).stochasticity_error(), 1e-12);
}

TEST(Equilibrium, DoublyStochastic) {
  const auto eq = equilibrium(MarkovGraph(2, {0.3, 0.7, 0.7, 0.3}));
  EXPECT_NEAR(eq.distribution[0], 0.5, 1e-9);
  EXPECT_NEAR(eq.distribution[1], 0.5, 1e-9);
}

TEST(Equilibrium, TwoStateDirectSolve) {
  // (P - I) pi = 0 with pi0 + pi1 = 1: -0.1 pi0 + 0.5 pi1 = 0.
  const MarkovGraph g(2, {0.9, 0.5, 0.1, 0.5});
  const auto eq = equilibrium(g);
  EXPECT_TRUE(eq.converged);
  EXPECT_NEAR(eq.distribution[0], 5.0 / 6.0, 1e-6);
  EXPECT_NEAR(eq.distribution[1], 1.0 / 6.0, 1e-6);
}

TEST(Equilibrium, FixedPointAndSimplex) {
  for (unsigned s = 0; s < 5; ++s) {
    const auto g = build_markov_graph(random_map(7, 5, s));
    const auto eq = equilibrium(g);
    EXPECT_TRUE(eq.converged);
    double sum = 0.0;
    for (double v : eq.distribution) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    const auto next = g.apply(eq.distribution);
    for (std::size_t i = 0; i < next.size(); ++i) EXPECT_LT(std::abs(next[i] - eq.distribution[i]), 1e-5);
  }
}

TEST(Activation, MatchesWeightedDegree) {
  // Symmetric weights normalized by column: the stationary law is proportional
  // to each node's total weight.
  const auto m = random_map(6, 5, 9);
  GbvsParams tight;
  tight.tolerance = 1e-14;
  const auto a = activation_map(m, tight);
  const double sigma = 0.15 * 6;
  std::vector<double> degree(m.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t k = 0; k < m.size(); ++k) degree[i] += std::abs(std::log(m[i] / m[k])) * kernel(i, k, 6, sigma);
    total += degree[i];
  }
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(a[i], degree[i] / total, 1e-10);
}

TEST(Concentration, MatchesClosedForm) {
  const auto act = random_map(6, 5, 4);
  GbvsParams tight;
  tight.tolerance = 1e-14;
  const auto c = concentrate_mass(act, tight);
  const double sigma = 0.15 * 6;
  std::vector<double> pi(act.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < act.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < act.size(); ++k) s += act[k] * kernel(i, k, 6, sigma);
    pi[i] = act[i] * s;
    total += pi[i];
  }
  for (std::size_t i = 0; i < act.size(); ++i) EXPECT_NEAR(c[i], pi[i] / total, 1e-10);
}

TEST(Concentration, SinglePeakKeepsArgmax) {
  DoubleGrid a(9, 7, 0.01);
  a(6, 2) = 1.0;
  const auto c = concentrate_mass(a);
  EXPECT_EQ(std::max_element(c.begin(), c.end()) - c.begin(), static_cast<std::ptrdiff_t>(2 * 9 + 6));
}

TEST(Concentration, UniformStaysUniform) {
  const auto c = concentrate_mass(DoubleGrid(5, 4, 0.3));
  for (double v : c) EXPECT_NEAR(v, 1.0 / 20.0, 1e-12);
}

TEST(Concentration, TwoPeaksSharpen) {
  DoubleGrid a(16, 4, 0.01);
  a(2, 1) = 2.0;
  a(13, 1) = 1.0;
  GbvsParams tight;
  tight.tolerance = 1e-14;
  const auto c = concentrate_mass(a, tight);
  EXPECT_GE(c(2, 1) / c(13, 1), 2.0);

  // Direct power iteration on the same chain.
  const auto g = concentration_graph(a);
  std::vector<double> x(a.size(), 1.0 / static_cast<double>(a.size()));
  for (int it = 0; it < 5000; ++it) x = g.apply(x);
  EXPECT_NEAR(c(2, 1), x[1 * 16 + 2], 1e-9);
  EXPECT_NEAR(c(13, 1), x[1 * 16 + 13], 1e-9);
}

TEST(Gabor, VerticalBarPrefersZeroDegrees) {
  FloatGrid lum(32, 32, 0.0f);
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 14; x < 18; ++x) lum(x, y) = 255.0f;
  }
  const auto e0 = gabor_energy(lum, 0.0), e90 = gabor_energy(lum, 90.0);
  for (std::size_t y = 8; y < 24; ++y) {
    EXPECT_GT(e0(14, y), e90(14, y));
    EXPECT_GT(e0(17, y), e90(17, y));
  }
}

TEST(Features, UniformGrayPair) {
  const RgbImage gray(16, 16, Rgb{128, 128, 128});
  const auto maps = extract_feature_maps(gray, &gray, VectorField(16, 16));
  ASSERT_EQ(maps.size(), 5u);
  for (const auto& m : maps) {
    const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
    if (m.channel == FeatureChannel::Intensity) EXPECT_NEAR(*hi - *lo, 0.0, 1e-12);
    if (m.channel == FeatureChannel::Flicker || m.channel == FeatureChannel::Motion) EXPECT_EQ(*hi, 0.0);
    if (m.channel == FeatureChannel::Orientation) EXPECT_LT(*hi, 1e-9);
  }
}

TEST(Features, FlickerOnlyNearDot) {
  GbvsParams p;
  p.downsample = 1;
  const auto a = dot_frame(32, 32, 8, 8), b = dot_frame(32, 32, 10, 8);
  const auto maps = extract_feature_maps(b, &a, VectorField(32, 32), p);
  const auto& flicker = maps[3].values;
  ASSERT_EQ(maps[3].channel, FeatureChannel::Flicker);
  double peak = 0.0;
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      const bool near = std::abs(int(x) - 9) <= 4 && std::abs(int(y) - 8) <= 3;
      if (!near) EXPECT_EQ(flicker(x, y), 0.0);
      peak = std::max(peak, flicker(x, y));
    }
  }
  EXPECT_GT(peak, 0.5);
}

TEST(Features, NodeGridCapped) {
  GbvsParams p;
  EXPECT_EQ(node_factor(64, 64, p), 4u);
  EXPECT_EQ(node_factor(640, 480, p), 10u);
  EXPECT_EQ(node_factor(641, 480, p), 11u);
}

TEST(Gbvs, BlankFramesNearUniform) {
  const RgbImage black(32, 24, Rgb{0, 0, 0});
  const auto s = gbvs_saliency(black, &black, VectorField(32, 24));
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  EXPECT_LT(*hi - *lo, 1e-6);
}

TEST(Gbvs, MovingDotIsFound) {
  const auto a = dot_frame(64, 48, 20, 30), b = dot_frame(64, 48, 23, 30);
  VectorField flow(64, 48);
  for (int y = 27; y <= 33; ++y) {
    for (int x = 18; x <= 28; ++x) flow.u(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = 3.0f;
  }
  const auto s = gbvs_saliency(b, &a, flow);
  const auto idx = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  const double x = double(idx % 64), y = double(idx / 64);
  EXPECT_LE(std::hypot(x - 23.0, y - 30.0), 8.0);
  for (float v : s) EXPECT_GE(v, 0.0f);
}
