#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "avsal/errors.hpp"
#include "avsal/filters.hpp"
#include "avsal/grid.hpp"
#include "avsal/media_io.hpp"
#include "avsal/optical_flow.hpp"

namespace avsal {

using MotionMap = Grid<std::uint8_t>;

struct FusionWeights {
  double visual = 1.0 / 3.0;
  double audio = 1.0 / 3.0;
  double motion = 1.0 / 3.0;

  double sum() const noexcept { return visual + audio + motion; }
};

inline void validate(const FusionWeights& w) {
  if (!(w.visual >= 0.0 && w.audio >= 0.0 && w.motion >= 0.0)) throw ParameterError("fusion weights must be >= 0");
  if (!(w.sum() > 0.0)) throw ParameterError("fusion weights must not all be zero");
}

/// Bradley-style adaptive threshold. A pixel is 0 when it is below
/// (1 - T/100) times the mean of its window x window neighbourhood
/// (clipped at the borders), 1 otherwise.
template <typename T>
MotionMap adaptive_threshold(const Grid<T>& magnitude, double percent, std::size_t window) {
  if (!(percent >= 0.0 && percent <= 100.0)) throw ParameterError("threshold percent must be in [0,100]");
  if (window < 1) throw ParameterError("threshold window must be >= 1");
  const DoubleGrid s = integral_image(magnitude);
  const double keep = 1.0 - percent / 100.0;
  const std::size_t half = window / 2;
  const std::size_t w = magnitude.width(), h = magnitude.height();
  MotionMap out(w, h, 0);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t y0 = y >= half ? y - half : 0;
    const std::size_t y1 = std::min(h - 1, y + half);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t x0 = x >= half ? x - half : 0;
      const std::size_t x1 = std::min(w - 1, x + half);
      const double sum = s(x1 + 1, y1 + 1) - s(x0, y1 + 1) - s(x1 + 1, y0) + s(x0, y0);
      const double avg = sum / static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1));
      out(x, y) = static_cast<double>(magnitude(x, y)) < keep * avg ? 0 : 1;
    }
  }
  return out;
}

/// Motion map of a mean-flow field: adaptive threshold of the flow magnitude,
/// additionally zeroing pixels slower than `floor` px/frame. window = 0 means
/// one eighth of the frame width.
inline MotionMap motion_map(const VectorField& mean_flow, double percent, std::size_t window = 0, double floor = 0.0) {
  const FloatGrid mag = mean_flow.magnitude();
  if (window == 0) window = std::max<std::size_t>(1, mag.width() / 8);
  MotionMap m = adaptive_threshold(mag, percent, window);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (static_cast<double>(mag[i]) < floor) m[i] = 0;
  }
  return m;
}

/// (v - min) / (max - min); a constant map becomes all zeros.
template <typename T>
SaliencyMap minmax_normalize(const Grid<T>& map) {
  SaliencyMap out(map.width(), map.height(), 0.0f);
  if (map.empty()) return out;
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const double mn = static_cast<double>(*lo), mx = static_cast<double>(*hi);
  if (!(mx > mn)) return out;
  for (std::size_t i = 0; i < map.size(); ++i) {
    out[i] = static_cast<float>(std::clamp((static_cast<double>(map[i]) - mn) / (mx - mn), 0.0, 1.0));
  }
  return out;
}

inline SaliencyMap to_saliency(const MotionMap& m) {
  SaliencyMap out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1.0f : 0.0f;
  return out;
}

/// Weighted mean (w_v V + w_a A + w_m M) / (w_v + w_a + w_m).
inline SaliencyMap combine(const SaliencyMap& visual, const SaliencyMap& audio, const SaliencyMap& motion,
                           const FusionWeights& w) {
  validate(w);
  require_same_shape(visual, audio, "combine");
  require_same_shape(visual, motion, "combine");
  SaliencyMap out(visual.width(), visual.height());
  const double total = w.sum();
  const double wv = w.visual / total, wa = w.audio / total, wm = w.motion / total;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = wv * visual[i] + wa * audio[i] + wm * motion[i];
    const double lo = std::min({visual[i], audio[i], motion[i]});
    const double hi = std::max({visual[i], audio[i], motion[i]});
    out[i] = static_cast<float>(std::clamp(v, lo, hi));
  }
  return out;
}

}  // namespace avsal
