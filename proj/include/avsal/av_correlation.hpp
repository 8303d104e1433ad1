#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "avsal/errors.hpp"
#include "avsal/filters.hpp"
#include "avsal/media_io.hpp"
#include "avsal/segmentation.hpp"
#include "avsal/tracking.hpp"

namespace avsal {

/// N seeded random permutations of [0, window_len). Shared, read-only, by
/// every hash computed for one pipeline run so audio and motion codes live in
/// the same rank space.
class PermutationSet {
public:
  PermutationSet(std::size_t window_len, std::size_t count, std::uint64_t seed) : window_len_(window_len) {
    if (window_len == 0 || count == 0) throw ParameterError("permutation set must be non-empty");
    std::mt19937_64 rng(seed);
    perms_.reserve(count);
    std::vector<std::uint32_t> p(window_len);
    for (std::size_t n = 0; n < count; ++n) {
      std::iota(p.begin(), p.end(), 0U);
      // Fisher-Yates with modulo draws: reproducible across standard libraries.
      for (std::size_t i = window_len - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(p[i], p[j]);
      }
      perms_.push_back(p);
    }
  }

  explicit PermutationSet(std::vector<std::vector<std::uint32_t>> perms) : perms_(std::move(perms)) {
    if (perms_.empty()) throw ParameterError("permutation set must be non-empty");
    window_len_ = perms_.front().size();
    for (const auto& p : perms_) {
      if (p.size() != window_len_) throw ParameterError("permutations must share one length");
    }
  }

  std::size_t window_len() const noexcept { return window_len_; }
  std::size_t count() const noexcept { return perms_.size(); }
  const std::vector<std::uint32_t>& operator[](std::size_t i) const { return perms_[i]; }

private:
  std::size_t window_len_ = 0;
  std::vector<std::vector<std::uint32_t>> perms_;
};

struct WtaHashCode {
  std::vector<std::uint16_t> symbols;
  int window = 0;  // S

  bool operator==(const WtaHashCode&) const = default;
};

/// Winner-take-all hash: for each permutation, the position (0..S-1) of the
/// maximum among the first S permuted entries; ties go to the lowest index.
inline WtaHashCode wta_hash(std::span<const double> window, const PermutationSet& perms, int s) {
  if (s < 1) throw ParameterError("WTA window size must be >= 1");
  if (window.size() < static_cast<std::size_t>(s)) throw ParameterError("descriptor window shorter than S");
  if (window.size() != perms.window_len()) throw ParameterError("descriptor window does not match permutation length");
  WtaHashCode code;
  code.window = s;
  code.symbols.resize(perms.count());
  for (std::size_t n = 0; n < perms.count(); ++n) {
    const auto& p = perms[n];
    std::uint16_t best = 0;
    double best_v = window[p[0]];
    for (int k = 1; k < s; ++k) {
      const double v = window[p[static_cast<std::size_t>(k)]];
      if (v > best_v) {
        best_v = v;
        best = static_cast<std::uint16_t>(k);
      }
    }
    code.symbols[n] = best;
  }
  return code;
}

inline std::size_t hamming_distance(const WtaHashCode& a, const WtaHashCode& b) {
  if (a.symbols.size() != b.symbols.size()) throw ParameterError("hash code length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.symbols.size(); ++i) d += a.symbols[i] != b.symbols[i];
  return d;
}

/// Values series[t-L+1 .. t], zero where the index falls outside the series.
inline std::vector<double> trailing_window(std::span<const double> series, std::size_t t, std::size_t length) {
  std::vector<double> w(length, 0.0);
  for (std::size_t k = 0; k < length; ++k) {
    const auto idx = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(length - 1 - k);
    if (idx >= 0 && static_cast<std::size_t>(idx) < series.size()) w[k] = series[static_cast<std::size_t>(idx)];
  }
  return w;
}

struct CorrelationScore {
  int track_id = 0;
  std::size_t frame = 0;
  double score = 0.0;  // 1 - normalized Hamming distance
};

/// Scores every track that owns a region in `frame` against the audio
/// descriptor over the trailing window of perms.window_len() frames.
inline std::vector<CorrelationScore> correlate_tracks(std::span<const double> audio, const std::vector<Track>& tracks,
                                                      std::size_t frame, const PermutationSet& perms, int s) {
  const std::size_t len = perms.window_len();
  if (len < static_cast<std::size_t>(s)) throw ParameterError("correlation window must be >= S");
  const WtaHashCode audio_code = wta_hash(trailing_window(audio, frame, len), perms, s);
  std::vector<CorrelationScore> scores;
  for (const auto& t : tracks) {
    if (!t.region_at(frame)) continue;
    const WtaHashCode motion_code = wta_hash(trailing_window(t.acceleration, frame, len), perms, s);
    const double d = static_cast<double>(hamming_distance(audio_code, motion_code));
    scores.push_back({t.id, frame, 1.0 - d / static_cast<double>(perms.count())});
  }
  return scores;
}

/// Paints each scored track's region with its score and blurs with a
/// Gaussian of `blur_sigma` pixels. Not normalized.
inline SaliencyMap render_audio_saliency(const std::vector<CorrelationScore>& scores, const SegmentationMap& seg,
                                         const std::vector<Track>& tracks, double blur_sigma = 10.0) {
  SaliencyMap map(seg.width(), seg.height(), 0.0f);
  std::map<int, float> by_label;
  for (const auto& sc : scores) {
    for (const auto& t : tracks) {
      if (t.id != sc.track_id) continue;
      if (const auto region = t.region_at(sc.frame)) by_label[*region] = static_cast<float>(sc.score);
    }
  }
  if (by_label.empty()) return map;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto it = by_label.find(seg.labels[i]);
    if (it != by_label.end()) map[i] = it->second;
  }
  return gaussian_blur(map, blur_sigma);
}

}  // namespace avsal
