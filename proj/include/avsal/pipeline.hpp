#pragma once

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "avsal/audio_descriptor.hpp"
#include "avsal/av_correlation.hpp"
#include "avsal/config.hpp"
#include "avsal/errors.hpp"
#include "avsal/fusion.hpp"
#include "avsal/media_io.hpp"
#include "avsal/optical_flow.hpp"
#include "avsal/segmentation.hpp"
#include "avsal/tracking.hpp"
#include "avsal/visual_saliency.hpp"

namespace avsal {

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"optical_flow", "segmentation",    "tracking",     "audio_descriptor",
                                              "av_correlation", "visual_saliency", "motion_map", "fusion"};
  return names;
}

/// Accumulated wall-clock seconds per stage.
struct StageTimings {
  std::map<std::string, double> seconds;

  double total() const {
    double s = 0.0;
    for (const auto& [k, v] : seconds) s += v;
    return s;
  }
  void add(const StageTimings& o) {
    for (const auto& [k, v] : o.seconds) seconds[k] += v;
  }
};

struct PipelineResult {
  std::vector<SaliencyMap> final_maps;
  std::vector<SaliencyMap> audio_maps;   // normalized
  std::vector<SaliencyMap> visual_maps;  // normalized
  std::vector<MotionMap> motion_maps;
  std::vector<SegmentationMap> segmentations;
  std::vector<Track> tracks;  // smoothed descriptors
  std::vector<std::vector<CorrelationScore>> scores;  // per frame
  std::vector<AssignmentRecord> assignments;
  AudioEnergyDescriptor audio_descriptor;
  StageTimings timings;
  bool used_audio = false;
};

namespace detail {

template <typename F>
auto timed_stage(StageTimings& timings, const std::string& stage, F&& f) -> decltype(f()) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    timings.seconds[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record();
    } else {
      auto r = f();
      record();
      return r;
    }
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

}  // namespace detail

/// Runs every stage on one clip. `audio` may be null, in which case the audio
/// branch is skipped and its weight is zero.
inline PipelineResult run_pipeline(const VideoClip& clip, const AudioTrack* audio, const PipelineConfig& config) {
  validate(config);
  if (clip.frame_count() < 2) throw InputError("pipeline needs at least 2 frames");
  const std::size_t n = clip.frame_count();
  const std::size_t w = clip.width, h = clip.height;

  PipelineResult res;
  res.used_audio = audio != nullptr && config.weights.audio > 0.0;
  auto& tm = res.timings;
  for (const auto& s : stage_names()) tm.seconds[s] = 0.0;

  std::vector<FloatGrid> lum(n);
  for (std::size_t t = 0; t < n; ++t) lum[t] = luma(clip.frames[t]);

  // Forward flows t -> t+1.
  std::vector<VectorField> fwd(n - 1);
  detail::timed_stage(tm, "optical_flow", [&] {
    for (std::size_t t = 0; t + 1 < n; ++t) fwd[t] = dense_flow(lum[t], lum[t + 1], config.flow);
  });

  RegionTracker tracker(config.tracker);
  std::vector<SaliencyMap> visual_raw(n);
  for (std::size_t t = 0; t < n; ++t) {
    VectorField ff, bf;
    detail::timed_stage(tm, "optical_flow", [&] {
      // Boundary frames mirror the one flow they have.
      auto negate = [](const VectorField& f) {
        VectorField r = f;
        for (auto& v : r.u) v = -v;
        for (auto& v : r.v) v = -v;
        return r;
      };
      bf = t > 0 ? dense_flow(lum[t], lum[t - 1], config.flow) : negate(fwd[0]);
      ff = t + 1 < n ? fwd[t] : negate(bf);
    });
    const VectorField mean = mean_velocity_flow(ff, bf);
    const VectorField g = acceleration_field(ff, bf);

    visual_raw[t] = detail::timed_stage(tm, "visual_saliency", [&] {
      return gbvs_saliency(clip.frames[t], t > 0 ? &clip.frames[t - 1] : nullptr, mean, config.gbvs);
    });
    res.motion_maps.push_back(detail::timed_stage(tm, "motion_map", [&] {
      return motion_map(mean, config.threshold_percent, config.motion_window, config.motion_floor);
    }));

    if (!res.used_audio) continue;
    SegmentationMap seg = detail::timed_stage(tm, "segmentation", [&] {
      const double norm = std::max(flow_magnitude_p99(mean), config.flow_color_floor);
      const RgbImage colored = flow_to_color(mean, norm);
      SegmentationMap s = mean_shift_segment(colored, config.mean_shift);
      s = merge_regions(s, colored, config.merge_delta_e);
      s = filter_small(s, config.min_region_pixels);
      return drop_static_regions(s, mean, config.static_region_speed);
    });
    detail::timed_stage(tm, "tracking", [&] {
      const auto regions = extract_regions(seg, clip.frames[t], config.histogram_bins, config.histogram_space);
      tracker.step(regions, seg, g);
    });
    res.segmentations.push_back(std::move(seg));
  }

  res.audio_maps.assign(n, SaliencyMap(w, h, 0.0f));
  if (res.used_audio) {
    res.audio_descriptor = detail::timed_stage(
        tm, "audio_descriptor", [&] { return energy_descriptor(*audio, clip.fps, n, config.audio_sigma); });
    detail::timed_stage(tm, "av_correlation", [&] {
      res.tracks = tracker.smoothed_tracks();
      res.assignments = tracker.log();
      const PermutationSet perms(config.correlation_window, config.permutations, config.permutation_seed);
      res.scores.resize(n);
      for (std::size_t t = 0; t < n; ++t) {
        res.scores[t] = correlate_tracks(res.audio_descriptor.values, res.tracks, t, perms, config.wta_window);
        res.audio_maps[t] =
            minmax_normalize(render_audio_saliency(res.scores[t], res.segmentations[t], res.tracks, config.audio_blur_sigma));
      }
    });
  }

  detail::timed_stage(tm, "fusion", [&] {
    FusionWeights wts = config.weights;
    if (!res.used_audio) wts.audio = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      res.visual_maps.push_back(minmax_normalize(visual_raw[t]));
      res.final_maps.push_back(combine(res.visual_maps[t], res.audio_maps[t], to_saliency(res.motion_maps[t]), wts));
    }
  });
  return res;
}

inline std::string frame_file_name(std::size_t index, const std::string& ext = ".png") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf + ext;
}

/// out/final/NNNNNN.png (+ .f32). With `intermediate`, also out/audio,
/// out/visual, out/motion, out/labels, tracks.csv and scores.csv.
inline void write_pipeline_outputs(const PipelineResult& r, const std::filesystem::path& out, bool intermediate) {
  namespace fs = std::filesystem;
  auto write_dir = [&](const std::string& name, const std::vector<SaliencyMap>& maps) {
    fs::create_directories(out / name);
    for (std::size_t t = 0; t < maps.size(); ++t) write_saliency_map(maps[t], out / name / frame_file_name(t));
  };
  write_dir("final", r.final_maps);
  if (!intermediate) return;
  write_dir("audio", r.audio_maps);
  write_dir("visual", r.visual_maps);
  std::vector<SaliencyMap> motion;
  for (const auto& m : r.motion_maps) motion.push_back(to_saliency(m));
  write_dir("motion", motion);
  if (!r.segmentations.empty()) {
    fs::create_directories(out / "labels");
    for (std::size_t t = 0; t < r.segmentations.size(); ++t) {
      write_label_map(r.segmentations[t].labels, out / "labels" / frame_file_name(t));
    }
  }
  std::ofstream tracks(out / "tracks.csv");
  if (!tracks) throw IoError("cannot write " + (out / "tracks.csv").string());
  tracks << std::setprecision(9) << "track_id,frame,region_id,cx,cy,m\n";
  for (const auto& tr : r.tracks) {
    for (std::size_t t = 0; t < tr.acceleration.size(); ++t) {
      const auto region = tr.region_at(t);
      tracks << tr.id << ',' << t << ',' << (region ? *region : 0) << ',' << tr.centroid.x << ',' << tr.centroid.y
             << ',' << tr.acceleration[t] << '\n';
    }
  }
  std::ofstream scores(out / "scores.csv");
  if (!scores) throw IoError("cannot write " + (out / "scores.csv").string());
  scores << std::setprecision(9) << "frame,track_id,score\n";
  for (const auto& frame : r.scores) {
    for (const auto& s : frame) scores << s.frame << ',' << s.track_id << ',' << s.score << '\n';
  }
}

// ---------------------------------------------------------------- batches

struct BatchJob {
  std::string name;
  std::filesystem::path frames;
  std::optional<std::filesystem::path> audio;
  std::optional<std::filesystem::path> out;
};

struct BatchOutcome {
  std::string name;
  bool ok = false;
  std::string error;
  StageTimings timings;
  std::size_t frames = 0;
};

/// Runs already-loaded clips on `workers` threads; each clip is independent.
inline std::vector<BatchOutcome> run_batch(const std::vector<std::function<BatchOutcome()>>& jobs, std::size_t workers) {
  std::vector<BatchOutcome> out(jobs.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= jobs.size()) return;
        i = next++;
      }
      try {
        out[i] = jobs[i]();
      } catch (const std::exception& e) {
        out[i].ok = false;
        out[i].error = e.what();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k + 1 < workers; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

inline std::vector<BatchOutcome> run_batch(const std::vector<BatchJob>& jobs, const PipelineConfig& config,
                                           std::size_t workers, bool intermediate = false) {
  std::vector<std::function<BatchOutcome()>> fns;
  for (const auto& job : jobs) {
    fns.emplace_back([&job, &config, intermediate] {
      BatchOutcome o;
      o.name = job.name;
      const VideoClip clip = load_frame_sequence(job.frames, config.fps);
      std::optional<AudioTrack> audio;
      if (job.audio) audio = load_wav(*job.audio);
      const auto r = run_pipeline(clip, audio ? &*audio : nullptr, config);
      if (job.out) write_pipeline_outputs(r, *job.out, intermediate);
      o.ok = true;
      o.timings = r.timings;
      o.frames = clip.frame_count();
      return o;
    });
  }
  return run_batch(fns, workers);
}

/// Per-stage seconds/frame table.
inline void print_timing_table(std::ostream& os, const StageTimings& t, std::size_t frames) {
  const double n = static_cast<double>(std::max<std::size_t>(1, frames));
  os << std::left << std::setw(20) << "stage" << std::right << std::setw(14) << "s/frame" << '\n';
  os << std::fixed << std::setprecision(6);
  for (const auto& s : stage_names()) {
    const auto it = t.seconds.find(s);
    os << std::left << std::setw(20) << s << std::right << std::setw(14) << (it == t.seconds.end() ? 0.0 : it->second / n)
       << '\n';
  }
  os << std::left << std::setw(20) << "total" << std::right << std::setw(14) << t.total() / n << '\n';
  os.unsetf(std::ios::floatfield);
}

}  // namespace avsal
