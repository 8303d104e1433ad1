#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <vector>

#include "avsal/errors.hpp"
#include "avsal/filters.hpp"
#include "avsal/grid.hpp"

namespace avsal {

/// Per-pixel 2-vector field (displacement, velocity or acceleration).
struct VectorField {
  FloatGrid u;
  FloatGrid v;

  VectorField() = default;
  VectorField(std::size_t width, std::size_t height) : u(width, height, 0.0f), v(width, height, 0.0f) {}
  VectorField(FloatGrid u_, FloatGrid v_) : u(std::move(u_)), v(std::move(v_)) {
    require_same_shape(u, v, "vector field");
  }

  std::size_t width() const noexcept { return u.width(); }
  std::size_t height() const noexcept { return u.height(); }

  FloatGrid magnitude() const {
    FloatGrid m(u.width(), u.height());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::hypot(u[i], v[i]);
    return m;
  }
};

enum class FlowDirection { Forward, Backward };

/// Forward flow of frame t points toward t+1; backward flow toward t-1.
struct FlowField : VectorField {
  FlowDirection direction = FlowDirection::Forward;
  std::size_t frame_index = 0;

  FlowField() = default;
  FlowField(VectorField f, FlowDirection dir, std::size_t frame)
      : VectorField(std::move(f)), direction(dir), frame_index(frame) {}
};

struct FlowParams {
  double alpha = 15.0;       // smoothness weight (intensities in [0,255])
  int iterations = 100;      // Jacobi sweeps per pyramid level
  int levels = 3;            // pyramid levels, coarsest first is solved first
  int warps = 4;             // re-linearizations per level (iterations split evenly)
};

namespace detail {

inline FloatGrid half_size(const FloatGrid& in) { return downsample_area(in, 2); }

inline float clamped(const FloatGrid& g, std::ptrdiff_t x, std::ptrdiff_t y) {
  x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(g.width()) - 1);
  y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(g.height()) - 1);
  return g(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
}

// Central differences with replicated edges.
inline void gradients(const FloatGrid& img, FloatGrid& gx, FloatGrid& gy) {
  gx = FloatGrid(img.width(), img.height());
  gy = FloatGrid(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const auto ix = static_cast<std::ptrdiff_t>(x), iy = static_cast<std::ptrdiff_t>(y);
      gx(x, y) = 0.5f * (clamped(img, ix + 1, iy) - clamped(img, ix - 1, iy));
      gy(x, y) = 0.5f * (clamped(img, ix, iy + 1) - clamped(img, ix, iy - 1));
    }
  }
}

// Horn-Schunck neighbourhood average (1/6 edge neighbours, 1/12 corners).
inline float hs_average(const FloatGrid& g, std::size_t x, std::size_t y) {
  const auto ix = static_cast<std::ptrdiff_t>(x), iy = static_cast<std::ptrdiff_t>(y);
  const float edge = clamped(g, ix - 1, iy) + clamped(g, ix + 1, iy) + clamped(g, ix, iy - 1) + clamped(g, ix, iy + 1);
  const float corner = clamped(g, ix - 1, iy - 1) + clamped(g, ix + 1, iy - 1) + clamped(g, ix - 1, iy + 1) +
                       clamped(g, ix + 1, iy + 1);
  return edge / 6.0f + corner / 12.0f;
}

inline FloatGrid warp(const FloatGrid& img, const VectorField& flow) {
  FloatGrid out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      out(x, y) = static_cast<float>(sample_bilinear(img, static_cast<double>(x) + flow.u(x, y),
                                                     static_cast<double>(y) + flow.v(x, y)));
    }
  }
  return out;
}

// Horn-Schunck at one pyramid level, refining `flow` in place.
inline void hs_level(const FloatGrid& src, const FloatGrid& dst, VectorField& flow, const FlowParams& p) {
  const float alpha2 = static_cast<float>(p.alpha * p.alpha);
  const int warps = std::max(1, p.warps);
  const int per_warp = std::max(1, p.iterations / warps);
  FloatGrid sx, sy, dx, dy;
  gradients(src, sx, sy);
  for (int w = 0; w < warps; ++w) {
    const FloatGrid warped = warp(dst, flow);
    gradients(warped, dx, dy);
    const VectorField base = flow;
    FloatGrid ix(src.width(), src.height()), iy(src.width(), src.height()), it(src.width(), src.height());
    for (std::size_t i = 0; i < src.size(); ++i) {
      ix[i] = 0.5f * (sx[i] + dx[i]);
      iy[i] = 0.5f * (sy[i] + dy[i]);
      it[i] = warped[i] - src[i];
    }
    for (int k = 0; k < per_warp; ++k) {
      VectorField next(src.width(), src.height());
      for (std::size_t y = 0; y < src.height(); ++y) {
        for (std::size_t x = 0; x < src.width(); ++x) {
          const float ub = hs_average(flow.u, x, y);
          const float vb = hs_average(flow.v, x, y);
          const float gx = ix(x, y), gy = iy(x, y);
          const float r = gx * (ub - base.u(x, y)) + gy * (vb - base.v(x, y)) + it(x, y);
          const float d = alpha2 + gx * gx + gy * gy;
          next.u(x, y) = ub - gx * r / d;
          next.v(x, y) = vb - gy * r / d;
        }
      }
      flow = std::move(next);
    }
  }
}

}  // namespace detail

/// Dense displacement from `src` to `dst` on luma images, pyramidal
/// Horn-Schunck. Deterministic (fixed iteration budget, no threading).
inline VectorField dense_flow(const FloatGrid& src, const FloatGrid& dst, const FlowParams& params = {}) {
  require_same_shape(src, dst, "dense_flow");
  if (src.empty()) throw ParameterError("dense_flow on empty image");
  std::vector<FloatGrid> ps{src}, pd{dst};
  for (int l = 1; l < params.levels; ++l) {
    if (ps.back().width() < 8 || ps.back().height() < 8) break;
    ps.push_back(detail::half_size(ps.back()));
    pd.push_back(detail::half_size(pd.back()));
  }
  VectorField flow(ps.back().width(), ps.back().height());
  for (std::size_t l = ps.size(); l-- > 0;) {
    const FloatGrid& s = ps[l];
    if (flow.width() != s.width() || flow.height() != s.height()) {
      const float sx = static_cast<float>(s.width()) / static_cast<float>(flow.width());
      const float sy = static_cast<float>(s.height()) / static_cast<float>(flow.height());
      FloatGrid u = resize_bilinear(flow.u, s.width(), s.height());
      FloatGrid v = resize_bilinear(flow.v, s.width(), s.height());
      for (auto& x : u) x *= sx;
      for (auto& x : v) x *= sy;
      flow = VectorField(std::move(u), std::move(v));
    }
    detail::hs_level(s, pd[l], flow, params);
  }
  return flow;
}

inline VectorField dense_flow(const RgbImage& src, const RgbImage& dst, const FlowParams& params = {}) {
  require_same_shape(src, dst, "dense_flow");
  return dense_flow(luma(src), luma(dst), params);
}

/// Mean velocity toward t+1: (F+ - F-) / 2.
inline VectorField mean_velocity_flow(const VectorField& fwd, const VectorField& bwd) {
  require_same_shape(fwd.u, bwd.u, "mean_velocity_flow");
  VectorField out(fwd.width(), fwd.height());
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    out.u[i] = 0.5f * (fwd.u[i] - bwd.u[i]);
    out.v[i] = 0.5f * (fwd.v[i] - bwd.v[i]);
  }
  return out;
}

inline FlowField mean_velocity_flow(const FlowField& fwd, const FlowField& bwd) {
  if (fwd.frame_index != bwd.frame_index) throw ParameterError("mean_velocity_flow: frame index mismatch");
  return FlowField(mean_velocity_flow(static_cast<const VectorField&>(fwd), static_cast<const VectorField&>(bwd)),
                   FlowDirection::Forward, fwd.frame_index);
}

/// Discrete acceleration g = F+ + F-, with F- in its native toward-(t-1) sign.
inline VectorField acceleration_field(const VectorField& fwd, const VectorField& bwd) {
  require_same_shape(fwd.u, bwd.u, "acceleration_field");
  VectorField out(fwd.width(), fwd.height());
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    out.u[i] = fwd.u[i] + bwd.u[i];
    out.v[i] = fwd.v[i] + bwd.v[i];
  }
  return out;
}

// ---------------------------------------------------------------- colour coding

/// Standard 55-entry flow colour wheel (red, yellow, green, cyan, blue, magenta).
inline const std::vector<std::array<double, 3>>& flow_color_wheel() {
  static const std::vector<std::array<double, 3>> wheel = [] {
    constexpr int ry = 15, yg = 6, gc = 4, cb = 11, bm = 13, mr = 6;
    std::vector<std::array<double, 3>> w;
    for (int i = 0; i < ry; ++i) w.push_back({255.0, 255.0 * i / ry, 0.0});
    for (int i = 0; i < yg; ++i) w.push_back({255.0 - 255.0 * i / yg, 255.0, 0.0});
    for (int i = 0; i < gc; ++i) w.push_back({0.0, 255.0, 255.0 * i / gc});
    for (int i = 0; i < cb; ++i) w.push_back({0.0, 255.0 - 255.0 * i / cb, 255.0});
    for (int i = 0; i < bm; ++i) w.push_back({255.0 * i / bm, 0.0, 255.0});
    for (int i = 0; i < mr; ++i) w.push_back({255.0, 0.0, 255.0 - 255.0 * i / mr});
    return w;
  }();
  return wheel;
}

/// Colour of one flow vector given a normalising magnitude. Zero flow is
/// white; saturation grows with min(1, |f| / max_mag).
inline Rgb flow_vector_color(double u, double v, double max_mag) {
  const auto& wheel = flow_color_wheel();
  const double ncols = static_cast<double>(wheel.size());
  const double rad = std::min(1.0, std::hypot(u, v) / max_mag);
  const double a = std::atan2(-v, -u) / std::numbers::pi;
  const double fk = (a + 1.0) / 2.0 * (ncols - 1.0);
  const auto k0 = static_cast<std::size_t>(std::floor(fk));
  const std::size_t k1 = (k0 + 1) % wheel.size();
  const double f = fk - static_cast<double>(k0);
  std::array<std::uint8_t, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    const double col = ((1.0 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
    out[c] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - rad * (1.0 - col))));
  }
  return {out[0], out[1], out[2]};
}

/// 99th-percentile flow magnitude (0 for an all-zero field).
inline double flow_magnitude_p99(const VectorField& flow) {
  std::vector<float> mags(flow.magnitude().storage());
  if (mags.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(mags.size() - 1)));
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
  return mags[k];
}

/// Colour-coded flow. `max_mag` unset means the 99th-percentile magnitude.
inline RgbImage flow_to_color(const VectorField& flow, std::optional<double> max_mag = std::nullopt) {
  double norm = max_mag ? *max_mag : flow_magnitude_p99(flow);
  if (max_mag && !(*max_mag > 0.0)) throw ParameterError("max_mag must be > 0");
  if (!(norm > 0.0)) norm = 1.0;  // all-zero field: every pixel is white anyway
  RgbImage img(flow.width(), flow.height());
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = flow_vector_color(flow.u[i], flow.v[i], norm);
  return img;
}

// ---------------------------------------------------------------- .flo dump

/// Middlebury `.flo`: "PIEH", int32 width, int32 height, interleaved float32 u,v.
inline void write_flo(const VectorField& flow, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out.write("PIEH", 4);
  const auto w = static_cast<std::int32_t>(flow.width());
  const auto h = static_cast<std::int32_t>(flow.height());
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    out.write(reinterpret_cast<const char*>(&flow.u[i]), 4);
    out.write(reinterpret_cast<const char*>(&flow.v[i]), 4);
  }
  if (!out) throw IoError("write failed for " + file.string());
}

inline VectorField read_flo(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  char magic[4];
  std::int32_t w = 0, h = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || std::memcmp(magic, "PIEH", 4) != 0 || w <= 0 || h <= 0) throw FormatError("bad .flo header in " + file.string());
  VectorField flow(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    in.read(reinterpret_cast<char*>(&flow.u[i]), 4);
    in.read(reinterpret_cast<char*>(&flow.v[i]), 4);
  }
  if (!in) throw FormatError("truncated .flo file " + file.string());
  return flow;
}

}  // namespace avsal
