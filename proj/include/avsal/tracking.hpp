#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "avsal/errors.hpp"
#include "avsal/filters.hpp"
#include "avsal/optical_flow.hpp"
#include "avsal/segmentation.hpp"

namespace avsal {

struct TrackerConfig {
  double search_radius = 100.0;  // r, pixels
  double cos_threshold = 0.8;
  double smoothing_sigma = 2.0;  // frames
  std::size_t inactivity_frames = 10;
};

inline void validate(const TrackerConfig& c) {
  if (!(c.search_radius > 0.0)) throw ParameterError("search radius must be > 0");
  if (!(c.cos_threshold > 0.0 && c.cos_threshold <= 1.0)) throw ParameterError("cos threshold must be in (0,1]");
  if (!(c.smoothing_sigma >= 0.0)) throw ParameterError("smoothing sigma must be >= 0");
}

struct Track {
  int id = 0;
  PointF centroid;                       // C_e
  std::vector<double> histogram;         // H_e, L1-normalized
  std::map<std::size_t, int> regions;    // frame -> region label in that frame's segmentation
  std::vector<double> acceleration;      // m_i(t); 0 where unassigned
  bool active = true;
  std::size_t missed = 0;                // consecutive unassigned frames

  std::optional<int> region_at(std::size_t frame) const {
    const auto it = regions.find(frame);
    if (it == regions.end()) return std::nullopt;
    return it->second;
  }
};

/// One accepted or newly created assignment; kept for auditing.
struct AssignmentRecord {
  std::size_t frame = 0;
  int track_id = 0;
  int region_id = 0;
  bool created = false;
  double distance = 0.0;  // to the track centroid before update
  double cosine = 0.0;
};

inline double centroid_distance(const PointF& region, const PointF& track) {
  const double dx = region.x - track.x, dy = region.y - track.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline double centroid_distance(const Region& region, const Track& track) {
  return centroid_distance(region.centroid, track.centroid);
}

/// Cosine similarity of two histograms.
inline double histogram_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("histogram length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) throw ParameterError("histogram has zero norm");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// m_i(t): mean per-pixel |g| over the pixels labelled `region_id`.
inline double region_acceleration(const SegmentationMap& seg, int region_id, const VectorField& g) {
  require_same_shape(seg.labels, g.u, "track_acceleration");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < seg.labels.size(); ++i) {
    if (seg.labels[i] != region_id) continue;
    sum += std::hypot(static_cast<double>(g.u[i]), static_cast<double>(g.v[i]));
    ++n;
  }
  if (n == 0) throw ParameterError("track_acceleration: empty region");
  return sum / static_cast<double>(n);
}

inline double track_acceleration(const Track& track, std::size_t frame, const SegmentationMap& seg,
                                 const VectorField& g) {
  const auto region = track.region_at(frame);
  if (!region) throw ParameterError("track_acceleration: track has no region in this frame");
  return region_acceleration(seg, *region, g);
}

/// Track with m_i(t) smoothed by a 1D Gaussian of `sigma` frames.
inline Track smooth_descriptor(const Track& track, double sigma) {
  Track out = track;
  out.acceleration = gaussian_smooth_1d(track.acceleration, sigma);
  return out;
}

/// Assigns the regions of `frame` to tracks. Each region picks the candidate
/// (active, within the search radius) with the highest cosine similarity; the
/// proposal stands when that similarity exceeds the threshold. A track takes
/// at most one region per frame: competing proposals are resolved by
/// descending similarity and the losers start new tracks, as do regions
/// without a proposal. Returns the assignment records for this frame.
inline std::vector<AssignmentRecord> assign_regions(std::vector<Track>& tracks, const std::vector<Region>& regions,
                                                    std::size_t frame, const TrackerConfig& config, int& next_id) {
  validate(config);
  struct Proposal {
    std::size_t region;
    std::size_t track;
    double cosine;
    double distance;
  };
  std::vector<Proposal> proposals;
  std::vector<bool> placed(regions.size(), false);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    std::optional<Proposal> best;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      if (!tracks[t].active) continue;
      const double d = centroid_distance(regions[r], tracks[t]);
      if (d > config.search_radius) continue;
      const double c = histogram_similarity(regions[r].histogram, tracks[t].histogram);
      if (!best || c > best->cosine) best = Proposal{r, t, c, d};
    }
    if (best && best->cosine > config.cos_threshold) proposals.push_back(*best);
  }
  std::stable_sort(proposals.begin(), proposals.end(), [](const Proposal& a, const Proposal& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.distance < b.distance;
  });

  std::vector<AssignmentRecord> records;
  std::vector<bool> track_taken(tracks.size(), false);
  for (const auto& p : proposals) {
    if (track_taken[p.track]) continue;
    track_taken[p.track] = true;
    placed[p.region] = true;
    Track& t = tracks[p.track];
    const Region& reg = regions[p.region];
    t.centroid = reg.centroid;
    double sum = 0.0;
    for (std::size_t i = 0; i < t.histogram.size(); ++i) {
      t.histogram[i] = 0.5 * (t.histogram[i] + reg.histogram[i]);
      sum += t.histogram[i];
    }
    for (auto& v : t.histogram) v /= sum;
    t.regions[frame] = reg.id;
    t.missed = 0;
    records.push_back({frame, t.id, reg.id, false, p.distance, p.cosine});
  }
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (placed[r]) continue;
    Track t;
    t.id = next_id++;
    t.centroid = regions[r].centroid;
    t.histogram = regions[r].histogram;
    t.regions[frame] = regions[r].id;
    tracks.push_back(std::move(t));
    track_taken.push_back(true);
    records.push_back({frame, tracks.back().id, regions[r].id, true, 0.0, 1.0});
  }
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    if (track_taken[t]) continue;
    if (++tracks[t].missed >= config.inactivity_frames) tracks[t].active = false;
  }
  return records;
}

/// Sequential multi-region tracker carrying state across frames.
class RegionTracker {
public:
  explicit RegionTracker(TrackerConfig config = {}) : config_(config) { validate(config_); }

  /// Processes frame `frames_processed()`: assigns regions and appends one
  /// m_i(t) sample to every track (0 where unassigned).
  void step(const std::vector<Region>& regions, const SegmentationMap& seg, const VectorField& g) {
    const std::size_t frame = frames_;
    auto recs = assign_regions(tracks_, regions, frame, config_, next_id_);
    log_.insert(log_.end(), recs.begin(), recs.end());
    for (auto& t : tracks_) {
      t.acceleration.resize(frame, 0.0);
      const auto region = t.region_at(frame);
      t.acceleration.push_back(region ? region_acceleration(seg, *region, g) : 0.0);
    }
    ++frames_;
  }

  std::size_t frames_processed() const noexcept { return frames_; }
  const std::vector<Track>& tracks() const noexcept { return tracks_; }
  const std::vector<AssignmentRecord>& log() const noexcept { return log_; }
  const TrackerConfig& config() const noexcept { return config_; }

  /// Tracks with smoothed acceleration descriptors.
  std::vector<Track> smoothed_tracks() const {
    std::vector<Track> out;
    out.reserve(tracks_.size());
    for (const auto& t : tracks_) out.push_back(smooth_descriptor(t, config_.smoothing_sigma));
    return out;
  }

private:
  TrackerConfig config_;
  std::vector<Track> tracks_;
  std::vector<AssignmentRecord> log_;
  std::size_t frames_ = 0;
  int next_id_ = 1;
};

}  // namespace avsal
