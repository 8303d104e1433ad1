#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "avsal/errors.hpp"
#include "avsal/filters.hpp"
#include "avsal/grid.hpp"
#include "avsal/media_io.hpp"

namespace avsal {

struct FixationDensityMap {
  DoubleGrid values;  // sums to 1 unless empty
  bool empty = true;
};

struct MetricConfig {
  std::size_t auc_repetitions = 10;
  std::uint64_t auc_seed = 1;
  double fixation_sigma_frac = 0.04;  // Gaussian sigma as a fraction of width
  double kl_epsilon = 1e-12;
  std::size_t frame_limit = 300;
};

/// Sum of isotropic Gaussians at the fixations, normalized to sum 1.
inline FixationDensityMap fixation_density(const std::vector<PointF>& fixations, std::size_t width, std::size_t height,
                                           double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("fixation density sigma must be > 0");
  FixationDensityMap out{DoubleGrid(width, height, 0.0), fixations.empty()};
  if (fixations.empty()) return out;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double v = 0.0;
      for (const auto& f : fixations) {
        const double dx = static_cast<double>(x) - f.x, dy = static_cast<double>(y) - f.y;
        v += std::exp(-(dx * dx + dy * dy) * inv);
      }
      out.values(x, y) = v;
    }
  }
  double sum = 0.0;
  for (double v : out.values) sum += v;
  for (double& v : out.values) v /= sum;
  return out;
}

// ---------------------------------------------------------------- AUC

/// Fixations rounded to the nearest pixel (clamped into the map), as flat indices.
inline std::vector<std::size_t> fixation_pixels(const std::vector<PointF>& fixations, std::size_t width,
                                                std::size_t height) {
  std::vector<std::size_t> idx;
  idx.reserve(fixations.size());
  for (const auto& f : fixations) {
    const auto x = static_cast<std::size_t>(std::clamp<long>(std::lround(f.x), 0, static_cast<long>(width) - 1));
    const auto y = static_cast<std::size_t>(std::clamp<long>(std::lround(f.y), 0, static_cast<long>(height) - 1));
    idx.push_back(y * width + x);
  }
  return idx;
}

/// Negative sample indices for each AUC repetition: `count` pixels drawn
/// uniformly (with replacement) from the pixels that are not fixated.
inline std::vector<std::vector<std::size_t>> auc_negative_samples(std::size_t pixel_count,
                                                                  const std::vector<std::size_t>& positives,
                                                                  std::size_t count, std::size_t repetitions,
                                                                  std::uint64_t seed) {
  const std::set<std::size_t> fixated(positives.begin(), positives.end());
  std::vector<std::size_t> pool;
  pool.reserve(pixel_count);
  for (std::size_t i = 0; i < pixel_count; ++i) {
    if (!fixated.contains(i)) pool.push_back(i);
  }
  std::vector<std::vector<std::size_t>> reps;
  if (pool.empty()) return reps;
  std::mt19937_64 rng(seed);
  for (std::size_t r = 0; r < repetitions; ++r) {
    std::vector<std::size_t> s(count);
    for (auto& v : s) v = pool[static_cast<std::size_t>(rng() % pool.size())];
    reps.push_back(std::move(s));
  }
  return reps;
}

/// ROC area from positive and negative scores: thresholds swept over every
/// distinct value, trapezoidal integration (ties count one half).
inline double roc_auc(std::vector<double> pos, std::vector<double> neg) {
  if (pos.empty() || neg.empty()) throw ParameterError("ROC needs positives and negatives");
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::sort(neg.begin(), neg.end(), std::greater<>());
  const double np = static_cast<double>(pos.size()), nn = static_cast<double>(neg.size());
  std::size_t ip = 0, in = 0;
  double area = 0.0, tpr = 0.0, fpr = 0.0;
  while (ip < pos.size() || in < neg.size()) {
    double thr = -std::numeric_limits<double>::infinity();
    if (ip < pos.size()) thr = std::max(thr, pos[ip]);
    if (in < neg.size()) thr = std::max(thr, neg[in]);
    while (ip < pos.size() && pos[ip] >= thr) ++ip;
    while (in < neg.size() && neg[in] >= thr) ++in;
    const double t2 = static_cast<double>(ip) / np, f2 = static_cast<double>(in) / nn;
    area += (f2 - fpr) * (t2 + tpr) * 0.5;
    tpr = t2;
    fpr = f2;
  }
  return area;
}

/// AUC with randomly drawn negatives (as many as fixations), averaged over
/// repetitions. Empty when there are no fixations or no unfixated pixels.
inline std::optional<double> auc(const SaliencyMap& sal, const std::vector<PointF>& fixations,
                                 std::size_t repetitions = 10, std::uint64_t seed = 1) {
  if (fixations.empty()) return std::nullopt;
  if (repetitions < 1) throw ParameterError("AUC repetitions must be >= 1");
  const auto positives = fixation_pixels(fixations, sal.width(), sal.height());
  const auto reps = auc_negative_samples(sal.size(), positives, positives.size(), repetitions, seed);
  if (reps.empty()) return std::nullopt;
  std::vector<double> pos;
  pos.reserve(positives.size());
  for (auto i : positives) pos.push_back(sal[i]);
  double total = 0.0;
  for (const auto& negatives : reps) {
    std::vector<double> neg;
    neg.reserve(negatives.size());
    for (auto i : negatives) neg.push_back(sal[i]);
    total += roc_auc(pos, std::move(neg));
  }
  return total / static_cast<double>(reps.size());
}

// ---------------------------------------------------------------- distribution metrics

namespace detail {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

template <typename T>
Moments moments(const Grid<T>& g) {
  double sum = 0.0;
  for (const auto& v : g) sum += static_cast<double>(v);
  const double mean = sum / static_cast<double>(g.size());
  double ss = 0.0;
  for (const auto& v : g) ss += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
  return {mean, std::sqrt(ss / static_cast<double>(g.size()))};
}

template <typename T>
bool constant(const Grid<T>& g) {
  return std::all_of(g.begin(), g.end(), [&](const T& v) { return v == g[0]; });
}

}  // namespace detail

/// KL(M_f || M_s). Both maps are normalized to sum 1, regularized with
/// epsilon and renormalized. Empty when the fixation map is empty.
inline std::optional<double> kl_divergence(const SaliencyMap& sal, const FixationDensityMap& fix,
                                           double epsilon = 1e-12) {
  require_same_shape(sal, fix.values, "kl_divergence");
  if (fix.empty) return std::nullopt;
  const std::size_t n = sal.size();
  double ssum = 0.0, fsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ssum += sal[i];
    fsum += fix.values[i];
  }
  const bool flat = !(ssum > 0.0);
  const double snorm = 1.0 + static_cast<double>(n) * epsilon;
  const double fnorm = 1.0 + static_cast<double>(n) * epsilon;
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = ((flat ? 1.0 / static_cast<double>(n) : sal[i] / ssum) + epsilon) / snorm;
    const double f = (fix.values[i] / fsum + epsilon) / fnorm;
    kl += f * std::log(f / s);
  }
  return kl;
}

/// Mean z-scored saliency at the fixations (bilinear at sub-pixel points).
inline std::optional<double> nss(const SaliencyMap& sal, const std::vector<PointF>& fixations) {
  if (fixations.empty() || sal.empty() || detail::constant(sal)) return std::nullopt;
  const auto m = detail::moments(sal);
  if (!(m.stddev > 0.0)) return std::nullopt;
  DoubleGrid z(sal.width(), sal.height());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (static_cast<double>(sal[i]) - m.mean) / m.stddev;
  double acc = 0.0;
  for (const auto& f : fixations) acc += sample_bilinear(z, f.x, f.y);
  return acc / static_cast<double>(fixations.size());
}

/// Pearson correlation of two maps over all pixels.
template <typename A, typename B>
std::optional<double> pearson(const Grid<A>& a, const Grid<B>& b) {
  require_same_shape(a, b, "cc");
  if (a.empty() || detail::constant(a) || detail::constant(b)) return std::nullopt;
  const auto ma = detail::moments(a), mb = detail::moments(b);
  if (!(ma.stddev > 0.0) || !(mb.stddev > 0.0)) return std::nullopt;
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (static_cast<double>(a[i]) - ma.mean) * (static_cast<double>(b[i]) - mb.mean);
  }
  cov /= static_cast<double>(a.size());
  return std::clamp(cov / (ma.stddev * mb.stddev), -1.0, 1.0);
}

inline std::optional<double> cc(const SaliencyMap& sal, const FixationDensityMap& fix) {
  if (fix.empty) return std::nullopt;
  return pearson(sal, fix.values);
}

// ---------------------------------------------------------------- per-video evaluation

struct FrameMetrics {
  std::size_t frame = 0;
  std::optional<double> auc, kl, nss, cc;
};

struct MetricMeans {
  std::optional<double> auc, kl, nss, cc;
};

struct MetricReport {
  std::string video;
  std::vector<FrameMetrics> frames;
  MetricMeans mean;
  std::vector<std::string> diagnostics;

  bool empty() const noexcept { return !mean.auc && !mean.kl && !mean.nss && !mean.cc; }
};

inline std::uint64_t frame_seed(std::uint64_t seed, std::size_t frame) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(frame) + 1));
}

/// Metrics for one frame; undefined metrics are left empty.
inline FrameMetrics evaluate_frame(const SaliencyMap& sal, const std::vector<PointF>& fixations, std::size_t frame,
                                   const MetricConfig& cfg = {}) {
  FrameMetrics m;
  m.frame = frame;
  if (fixations.empty()) return m;
  const auto density =
      fixation_density(fixations, sal.width(), sal.height(), cfg.fixation_sigma_frac * static_cast<double>(sal.width()));
  m.auc = auc(sal, fixations, cfg.auc_repetitions, frame_seed(cfg.auc_seed, frame));
  m.kl = kl_divergence(sal, density, cfg.kl_epsilon);
  m.nss = nss(sal, fixations);
  m.cc = cc(sal, density);
  return m;
}

inline MetricMeans average(const std::vector<FrameMetrics>& frames) {
  auto mean_of = [&](auto member) -> std::optional<double> {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& f : frames) {
      if (const auto& v = f.*member) {
        s += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
  };
  return {mean_of(&FrameMetrics::auc), mean_of(&FrameMetrics::kl), mean_of(&FrameMetrics::nss),
          mean_of(&FrameMetrics::cc)};
}

/// Evaluates frames [0, min(frame_limit, maps)) against the fixations.
/// `maps[i]` is the map of frame i.
inline MetricReport evaluate_video(const std::vector<SaliencyMap>& maps, const FixationSet& fixations,
                                   const MetricConfig& cfg = {}, std::string video = "video") {
  MetricReport report;
  report.video = std::move(video);
  const std::size_t n = cfg.frame_limit > 0 ? std::min(cfg.frame_limit, maps.size()) : maps.size();
  for (std::size_t t = 0; t < n; ++t) report.frames.push_back(evaluate_frame(maps[t], fixations.points(t), t, cfg));
  report.mean = average(report.frames);
  if (report.empty()) report.diagnostics.push_back("no frame with defined metrics (no fixations in evaluated range?)");
  return report;
}

// ---------------------------------------------------------------- report files

namespace detail {

inline std::string csv_field(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

inline nlohmann::json json_value(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Per-frame CSV: video,frame,auc,kl,nss,cc (undefined metrics left blank).
inline void write_report_csv(const std::vector<MetricReport>& reports, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "video,frame,auc,kl,nss,cc\n";
  for (const auto& r : reports) {
    for (const auto& f : r.frames) {
      out << r.video << ',' << f.frame << ',' << detail::csv_field(f.auc) << ',' << detail::csv_field(f.kl) << ','
          << detail::csv_field(f.nss) << ',' << detail::csv_field(f.cc) << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + file.string());
}

/// Corpus mean of per-video means for each metric.
inline MetricMeans corpus_means(const std::vector<MetricReport>& reports) {
  std::vector<FrameMetrics> per_video;
  for (const auto& r : reports) per_video.push_back({0, r.mean.auc, r.mean.kl, r.mean.nss, r.mean.cc});
  return average(per_video);
}

/// JSON summary: per-video means, corpus means, and a metric-by-method table
/// (one row per metric, one column per method).
inline nlohmann::json report_json(const std::vector<MetricReport>& reports, const std::string& method) {
  using nlohmann::json;
  json j;
  j["method"] = method;
  j["videos"] = json::array();
  for (const auto& r : reports) {
    std::size_t defined = 0;
    for (const auto& f : r.frames) defined += f.auc || f.kl || f.nss || f.cc;
    j["videos"].push_back({{"video", r.video},
                           {"frames_evaluated", r.frames.size()},
                           {"frames_defined", defined},
                           {"auc", detail::json_value(r.mean.auc)},
                           {"kl", detail::json_value(r.mean.kl)},
                           {"nss", detail::json_value(r.mean.nss)},
                           {"cc", detail::json_value(r.mean.cc)},
                           {"diagnostics", r.diagnostics}});
  }
  const auto c = corpus_means(reports);
  j["corpus"] = {{"AUC", detail::json_value(c.auc)},
                 {"D_KL", detail::json_value(c.kl)},
                 {"NSS", detail::json_value(c.nss)},
                 {"CC", detail::json_value(c.cc)}};
  j["table"] = json::array({json{{"metric", "AUC"}, {method, detail::json_value(c.auc)}},
                            json{{"metric", "D_KL"}, {method, detail::json_value(c.kl)}},
                            json{{"metric", "NSS"}, {method, detail::json_value(c.nss)}},
                            json{{"metric", "CC"}, {method, detail::json_value(c.cc)}}});
  return j;
}

inline void write_report_json(const std::vector<MetricReport>& reports, const std::string& method,
                              const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << report_json(reports, method).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + file.string());
}

}  // namespace avsal
