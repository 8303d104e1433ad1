#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "avsal/tracking.hpp"

using namespace avsal;

namespace {

Region region(int id, double cx, double cy, std::vector<double> hist) {
  Region r;
  r.id = id;
  r.centroid = {cx, cy};
  r.histogram = std::move(hist);
  return r;
}

}  // namespace

TEST(CentroidDistance, Examples) {
  EXPECT_DOUBLE_EQ(centroid_distance(PointF{3, 4}, PointF{0, 0}), 5.0);
  EXPECT_DOUBLE_EQ(centroid_distance(PointF{2, 7}, PointF{2, 7}), 0.0);
  EXPECT_DOUBLE_EQ(centroid_distance(PointF{0, 0}, PointF{10, 0}), 10.0);
}

TEST(HistogramSimilarity, Examples) {
  const std::vector<double> a{0.2, 0.3, 0.5};
  EXPECT_NEAR(histogram_similarity(a, a), 1.0, 1e-15);
  EXPECT_EQ(histogram_similarity(std::vector<double>{1, 0, 0}, std::vector<double>{0, 0.5, 0.5}), 0.0);
  // dot 0.25, norms sqrt(0.5) each: 0.25 / 0.5
  EXPECT_NEAR(histogram_similarity(std::vector<double>{.5, .5, 0}, std::vector<double>{.5, 0, .5}), 0.5, 1e-15);
}

TEST(HistogramSimilarity, Errors) {
  EXPECT_THROW(histogram_similarity(std::vector<double>{1, 0}, std::vector<double>{1}), ParameterError);
  EXPECT_THROW(histogram_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), ParameterError);
}

TEST(AssignRegions, FirstFrameCreatesTracks) {
  std::vector<Track> tracks;
  int next = 1;
  const auto recs = assign_regions(tracks, {region(1, 5, 5, {1, 0}), region(2, 30, 30, {0, 1})}, 0, {}, next);
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_EQ(recs.size(), 2u);
  EXPECT_TRUE(recs[0].created);
  EXPECT_EQ(tracks[0].region_at(0), 1);
  EXPECT_EQ(tracks[1].region_at(0), 2);
  EXPECT_EQ(next, 3);
}

TEST(AssignRegions, ReappearingRegionKeepsId) {
  std::vector<Track> tracks;
  int next = 1;
  assign_regions(tracks, {region(1, 5, 5, {0.3, 0.7})}, 0, {}, next);
  const auto recs = assign_regions(tracks, {region(4, 9, 8, {0.3, 0.7})}, 1, {}, next);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_FALSE(recs[0].created);
  EXPECT_EQ(recs[0].track_id, tracks[0].id);
  EXPECT_DOUBLE_EQ(recs[0].distance, 5.0);
  EXPECT_EQ(tracks[0].region_at(1), 4);
  EXPECT_DOUBLE_EQ(tracks[0].centroid.x, 9.0);
}

TEST(AssignRegions, SearchRadiusBoundary) {
  std::vector<Track> tracks;
  int next = 1;
  assign_regions(tracks, {region(1, 0, 0, {1, 0})}, 0, {}, next);
  assign_regions(tracks, {region(1, 100, 0, {1, 0})}, 1, {}, next);
  EXPECT_EQ(tracks.size(), 1u);
  assign_regions(tracks, {region(1, 201, 0, {1, 0})}, 2, {}, next);
  EXPECT_EQ(tracks.size(), 2u);
}

TEST(AssignRegions, CosineThresholdIsStrict) {
  std::vector<Track> tracks;
  int next = 1;
  TrackerConfig cfg;
  cfg.cos_threshold = 0.5;
  assign_regions(tracks, {region(1, 0, 0, {.5, .5, 0})}, 0, cfg, next);
  assign_regions(tracks, {region(1, 1, 0, {.5, 0, .5})}, 1, cfg, next);  // cos = 0.5 exactly
  EXPECT_EQ(tracks.size(), 2u);
}

TEST(AssignRegions, ConflictGoesToHigherCosine) {
  std::vector<Track> tracks;
  int next = 1;
  assign_regions(tracks, {region(1, 10, 10, {1, 0, 0})}, 0, {}, next);
  const auto recs =
      assign_regions(tracks, {region(1, 12, 10, {0.9, 0.1, 0}), region(2, 11, 10, {1, 0, 0})}, 1, {}, next);
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_EQ(tracks[0].region_at(1), 2);
  EXPECT_EQ(tracks[1].region_at(1), 1);
  int created = 0;
  for (const auto& r : recs) created += r.created;
  EXPECT_EQ(created, 1);
}

TEST(AssignRegions, HistogramUpdateIsRenormalizedMean) {
  std::vector<Track> tracks;
  int next = 1;
  assign_regions(tracks, {region(1, 0, 0, {0.6, 0.4, 0})}, 0, {}, next);
  assign_regions(tracks, {region(1, 0, 0, {0.5, 0.4, 0.1})}, 1, {}, next);
  EXPECT_NEAR(tracks[0].histogram[0], 0.55, 1e-15);
  EXPECT_NEAR(tracks[0].histogram[1], 0.40, 1e-15);
  EXPECT_NEAR(tracks[0].histogram[2], 0.05, 1e-15);
}

TEST(AssignRegions, InactivityAfterMissedFrames) {
  std::vector<Track> tracks;
  int next = 1;
  TrackerConfig cfg;
  cfg.inactivity_frames = 3;
  assign_regions(tracks, {region(1, 0, 0, {1, 0})}, 0, cfg, next);
  for (std::size_t f = 1; f <= 3; ++f) assign_regions(tracks, {}, f, cfg, next);
  EXPECT_FALSE(tracks[0].active);
  assign_regions(tracks, {region(1, 0, 0, {1, 0})}, 4, cfg, next);
  EXPECT_EQ(tracks.size(), 2u);
}

TEST(AssignRegions, AcceptedRecordsRespectGates) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> pos(0, 300), h(0, 1);
  std::vector<Track> tracks;
  int next = 1;
  const TrackerConfig cfg;
  for (std::size_t f = 0; f < 30; ++f) {
    std::vector<Region> regs;
    for (int k = 0; k < 5; ++k) regs.push_back(region(k + 1, pos(rng), pos(rng), {h(rng) + 0.01, h(rng), h(rng)}));
    for (const auto& rec : assign_regions(tracks, regs, f, cfg, next)) {
      if (rec.created) continue;
      EXPECT_LE(rec.distance, cfg.search_radius);
      EXPECT_GT(rec.cosine, cfg.cos_threshold);
    }
  }
}

TEST(RegionAcceleration, UniformFields) {
  const SegmentationMap seg(Grid<int>(4, 4, 1));
  EXPECT_EQ(region_acceleration(seg, 1, VectorField(4, 4)), 0.0);
  VectorField g(4, 4);
  g.u.fill(3.0f);
  g.v.fill(4.0f);
  EXPECT_DOUBLE_EQ(region_acceleration(seg, 1, g), 5.0);
  EXPECT_THROW(region_acceleration(seg, 2, g), ParameterError);
}

TEST(RegionAcceleration, MixedFieldMatchesPixelSum) {
  Grid<int> l(20, 20, 0);
  for (std::size_t i = 0; i < 200; ++i) l[i + 100] = 3;
  std::mt19937 rng(5);
  std::normal_distribution<float> nd(0.0f, 2.0f);
  VectorField g(20, 20);
  for (std::size_t i = 0; i < g.u.size(); ++i) {
    g.u[i] = nd(rng);
    g.v[i] = nd(rng);
  }
  double sum = 0.0;
  for (std::size_t i = 100; i < 300; ++i) sum += std::sqrt(double(g.u[i]) * g.u[i] + double(g.v[i]) * g.v[i]);
  EXPECT_NEAR(region_acceleration(SegmentationMap(l), 3, g), sum / 200.0, 1e-9);
}

TEST(RegionTracker, SeriesShareTimeAxis) {
  RegionTracker tracker;
  Grid<int> l(10, 10, 0);
  for (std::size_t i = 0; i < 50; ++i) l[i] = 1;
  for (std::size_t i = 50; i < 100; ++i) l[i] = 2;
  const SegmentationMap seg(l);
  VectorField g(10, 10);
  g.u.fill(1.0f);
  tracker.step({region(1, 4, 2, {1, 0})}, seg, g);
  tracker.step({}, seg, g);
  tracker.step({region(1, 4, 2, {1, 0}), region(2, 60, 60, {0, 1})}, seg, g);
  ASSERT_EQ(tracker.tracks().size(), 2u);
  for (const auto& t : tracker.tracks()) EXPECT_EQ(t.acceleration.size(), 3u);
  EXPECT_EQ(tracker.tracks()[0].acceleration, (std::vector<double>{1.0, 0.0, 1.0}));
  EXPECT_EQ(tracker.tracks()[1].acceleration, (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(RegionTracker, SmoothedDescriptor) {
  Track t;
  t.acceleration = {0, 0, 0, 1, 0, 0, 0};
  const auto s = smooth_descriptor(t, 1.0);
  EXPECT_EQ(s.acceleration, gaussian_smooth_1d(t.acceleration, 1.0));
}
