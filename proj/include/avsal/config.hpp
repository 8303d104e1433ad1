#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "avsal/errors.hpp"
#include "avsal/fusion.hpp"
#include "avsal/metrics.hpp"
#include "avsal/optical_flow.hpp"
#include "avsal/segmentation.hpp"
#include "avsal/tracking.hpp"
#include "avsal/visual_saliency.hpp"

namespace avsal {

/// Every tunable of the pipeline. Defaults: search radius 100 px, 2000 WTA
/// permutations with window 5, motion threshold 10%.
struct PipelineConfig {
  double fps = 30.0;

  // audio descriptor
  double audio_sigma = 2.0;

  // optical flow
  FlowParams flow;
  double flow_color_floor = 1.0;  // minimum normalising magnitude for flow colouring, px

  // segmentation
  MeanShiftParams mean_shift;
  double merge_delta_e = 10.0;
  std::size_t min_region_pixels = 200;
  double static_region_speed = 0.25;  // regions slower than this (px/frame) are background
  std::size_t histogram_bins = 8;
  HistogramSpace histogram_space = HistogramSpace::Luv;

  // tracking
  TrackerConfig tracker;

  // audio-visual correlation
  std::size_t permutations = 2000;  // N
  int wta_window = 5;               // S
  std::size_t correlation_window = 32;  // L, frames
  std::uint64_t permutation_seed = 0x5EED'A0D1'0C0Dull;
  double audio_blur_sigma = 10.0;

  // visual saliency
  GbvsParams gbvs;

  // motion map
  double threshold_percent = 10.0;  // T
  std::size_t motion_window = 0;    // 0: width / 8
  double motion_floor = 0.1;        // px/frame

  // fusion
  FusionWeights weights;

  // evaluation
  MetricConfig metrics;

  std::size_t workers = 1;
};

namespace detail {

struct ConfigKey {
  std::string name;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "': not a number: '" + v + "'");
  }
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    const auto u = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "': not a non-negative integer: '" + v + "'");
  }
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

template <typename T>
ConfigKey real_key(std::string name, T PipelineConfig::*outer, double T::*inner) {
  return {name, [=](PipelineConfig& c, const std::string& v) { c.*outer.*inner = to_double(name, v); },
          [=](const PipelineConfig& c) { return fmt(c.*outer.*inner); }};
}

inline ConfigKey real_key(std::string name, double PipelineConfig::*m) {
  return {name, [=](PipelineConfig& c, const std::string& v) { c.*m = to_double(name, v); },
          [=](const PipelineConfig& c) { return fmt(c.*m); }};
}

template <typename U>
ConfigKey uint_key(std::string name, U PipelineConfig::*m) {
  return {name, [=](PipelineConfig& c, const std::string& v) { c.*m = static_cast<U>(to_uint(name, v)); },
          [=](const PipelineConfig& c) { return std::to_string(c.*m); }};
}

template <typename T, typename U>
ConfigKey uint_key(std::string name, T PipelineConfig::*outer, U T::*inner) {
  return {name, [=](PipelineConfig& c, const std::string& v) { c.*outer.*inner = static_cast<U>(to_uint(name, v)); },
          [=](const PipelineConfig& c) { return std::to_string(c.*outer.*inner); }};
}

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    using C = PipelineConfig;
    std::vector<ConfigKey> k;
    k.push_back(real_key("fps", &C::fps));
    k.push_back(real_key("audio.sigma", &C::audio_sigma));
    k.push_back(real_key("flow.alpha", &C::flow, &FlowParams::alpha));
    k.push_back(uint_key("flow.iterations", &C::flow, &FlowParams::iterations));
    k.push_back(uint_key("flow.levels", &C::flow, &FlowParams::levels));
    k.push_back(uint_key("flow.warps", &C::flow, &FlowParams::warps));
    k.push_back(real_key("flow.color_floor", &C::flow_color_floor));
    k.push_back(real_key("segment.spatial_bandwidth", &C::mean_shift, &MeanShiftParams::spatial_bandwidth));
    k.push_back(real_key("segment.range_bandwidth", &C::mean_shift, &MeanShiftParams::range_bandwidth));
    k.push_back(uint_key("segment.max_iterations", &C::mean_shift, &MeanShiftParams::max_iterations));
    k.push_back(real_key("segment.merge_delta_e", &C::merge_delta_e));
    k.push_back(uint_key("segment.min_pixels", &C::min_region_pixels));
    k.push_back(real_key("segment.static_speed", &C::static_region_speed));
    k.push_back(uint_key("segment.histogram_bins", &C::histogram_bins));
    k.push_back({"segment.histogram_space",
                 [](C& c, const std::string& v) {
                   if (v == "luv") {
                     c.histogram_space = HistogramSpace::Luv;
                   } else if (v == "hsv") {
                     c.histogram_space = HistogramSpace::Hsv;
                   } else {
                     throw ParameterError("segment.histogram_space must be 'luv' or 'hsv'");
                   }
                 },
                 [](const C& c) { return std::string(c.histogram_space == HistogramSpace::Luv ? "luv" : "hsv"); }});
    k.push_back(real_key("track.search_radius", &C::tracker, &TrackerConfig::search_radius));
    k.push_back(real_key("track.cos_threshold", &C::tracker, &TrackerConfig::cos_threshold));
    k.push_back(real_key("track.sigma", &C::tracker, &TrackerConfig::smoothing_sigma));
    k.push_back(uint_key("track.inactivity_frames", &C::tracker, &TrackerConfig::inactivity_frames));
    k.push_back(uint_key("wta.permutations", &C::permutations));
    k.push_back(uint_key("wta.window", &C::wta_window));
    k.push_back(uint_key("wta.correlation_window", &C::correlation_window));
    k.push_back(uint_key("wta.seed", &C::permutation_seed));
    k.push_back(real_key("audio_map.blur_sigma", &C::audio_blur_sigma));
    k.push_back(uint_key("gbvs.downsample", &C::gbvs, &GbvsParams::downsample));
    k.push_back(real_key("gbvs.sigma_frac", &C::gbvs, &GbvsParams::sigma_frac));
    k.push_back(real_key("gbvs.tolerance", &C::gbvs, &GbvsParams::tolerance));
    k.push_back(uint_key("gbvs.max_iterations", &C::gbvs, &GbvsParams::max_iterations));
    k.push_back(real_key("motion.threshold_percent", &C::threshold_percent));
    k.push_back(uint_key("motion.window", &C::motion_window));
    k.push_back(real_key("motion.floor", &C::motion_floor));
    k.push_back(real_key("fusion.visual", &C::weights, &FusionWeights::visual));
    k.push_back(real_key("fusion.audio", &C::weights, &FusionWeights::audio));
    k.push_back(real_key("fusion.motion", &C::weights, &FusionWeights::motion));
    k.push_back(uint_key("eval.auc_repetitions", &C::metrics, &MetricConfig::auc_repetitions));
    k.push_back(uint_key("eval.auc_seed", &C::metrics, &MetricConfig::auc_seed));
    k.push_back(real_key("eval.fixation_sigma_frac", &C::metrics, &MetricConfig::fixation_sigma_frac));
    k.push_back(real_key("eval.kl_epsilon", &C::metrics, &MetricConfig::kl_epsilon));
    k.push_back(uint_key("eval.frame_limit", &C::metrics, &MetricConfig::frame_limit));
    k.push_back(uint_key("workers", &C::workers));
    return k;
  }();
  return keys;
}

}  // namespace detail

/// Checks the ranges every stage relies on.
inline void validate(const PipelineConfig& c) {
  if (!(c.fps > 0.0)) throw ParameterError("fps must be > 0");
  if (!(c.audio_sigma >= 0.0)) throw ParameterError("audio.sigma must be >= 0");
  if (!(c.flow.alpha > 0.0) || c.flow.iterations < 1 || c.flow.levels < 1) throw ParameterError("invalid flow parameters");
  if (!(c.flow_color_floor > 0.0)) throw ParameterError("flow.color_floor must be > 0");
  if (!(c.mean_shift.spatial_bandwidth >= 1.0) || !(c.mean_shift.range_bandwidth > 0.0)) {
    throw ParameterError("mean-shift bandwidths must be positive (spatial >= 1)");
  }
  if (!(c.merge_delta_e > 0.0)) throw ParameterError("segment.merge_delta_e must be > 0");
  if (c.histogram_bins < 1) throw ParameterError("segment.histogram_bins must be >= 1");
  validate(c.tracker);
  if (c.permutations < 1) throw ParameterError("wta.permutations must be >= 1");
  if (c.wta_window < 1) throw ParameterError("wta.window must be >= 1");
  if (c.correlation_window < static_cast<std::size_t>(c.wta_window)) {
    throw ParameterError("wta.correlation_window must be >= wta.window");
  }
  if (!(c.audio_blur_sigma >= 0.0)) throw ParameterError("audio_map.blur_sigma must be >= 0");
  if (c.gbvs.downsample < 1 || !(c.gbvs.sigma_frac > 0.0)) throw ParameterError("invalid gbvs parameters");
  if (!(c.threshold_percent >= 0.0 && c.threshold_percent <= 100.0)) {
    throw ParameterError("motion.threshold_percent must be in [0,100]");
  }
  validate(c.weights);
  if (c.metrics.auc_repetitions < 1) throw ParameterError("eval.auc_repetitions must be >= 1");
  if (!(c.metrics.fixation_sigma_frac > 0.0)) throw ParameterError("eval.fixation_sigma_frac must be > 0");
  if (c.workers < 1) throw ParameterError("workers must be >= 1");
}

/// Sets one `key = value` pair. Unknown keys are an error.
inline void set_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
  for (const auto& k : detail::config_keys()) {
    if (k.name == key) {
      k.set(c, value);
      return;
    }
  }
  throw ParameterError("unknown config key '" + key + "'");
}

/// Applies a `key=value` override string.
inline void apply_override(PipelineConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ParameterError("override must be key=value: '" + assignment + "'");
  set_config_value(c, std::string(detail::trim(std::string_view(assignment).substr(0, eq))),
                   std::string(detail::trim(std::string_view(assignment).substr(eq + 1))));
}

/// Parses `key = value` lines; '#' starts a comment.
inline PipelineConfig parse_config(std::istream& in, PipelineConfig base = {}) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    try {
      apply_override(base, std::string(t));
    } catch (const ParameterError& e) {
      throw ParameterError("config line " + std::to_string(n) + ": " + e.what());
    }
  }
  validate(base);
  return base;
}

inline PipelineConfig load_config(const std::filesystem::path& file, PipelineConfig base = {}) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open config " + file.string());
  return parse_config(in, std::move(base));
}

/// All keys with their current values, one `key = value` per line.
inline std::string config_to_text(const PipelineConfig& c) {
  std::string out;
  for (const auto& k : detail::config_keys()) out += k.name + " = " + k.get(c) + "\n";
  return out;
}

}  // namespace avsal
