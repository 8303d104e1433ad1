#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "avsal/errors.hpp"
#include "avsal/filters.hpp"
#include "avsal/grid.hpp"
#include "avsal/media_io.hpp"
#include "avsal/optical_flow.hpp"

// Graph-based visual saliency: each feature map becomes a fully connected
// Markov chain whose equilibrium marks dissimilar nodes; a second chain
// concentrates that activation; channel results are summed.

namespace avsal {

enum class FeatureChannel { Intensity, Color, Orientation, Flicker, Motion };

inline constexpr std::array<FeatureChannel, 5> kFeatureChannels{
    FeatureChannel::Intensity, FeatureChannel::Color, FeatureChannel::Orientation, FeatureChannel::Flicker,
    FeatureChannel::Motion};

inline const char* channel_name(FeatureChannel c) {
  switch (c) {
    case FeatureChannel::Intensity: return "intensity";
    case FeatureChannel::Color: return "color";
    case FeatureChannel::Orientation: return "orientation";
    case FeatureChannel::Flicker: return "flicker";
    case FeatureChannel::Motion: return "motion";
  }
  return "?";
}

struct FeatureMap {
  DoubleGrid values;
  FeatureChannel channel = FeatureChannel::Intensity;
};

struct GaborParams {
  double wavelength = 6.0;  // pixels
  double sigma = 2.5;       // envelope, pixels
  double aspect = 0.5;
};

struct GbvsParams {
  std::size_t downsample = 4;
  std::size_t max_nodes_x = 64;
  std::size_t max_nodes_y = 48;
  double sigma_frac = 0.15;     // Gaussian falloff as a fraction of map width
  double tolerance = 1e-6;      // L-inf change between power iterations
  std::size_t max_iterations = 10000;
  GaborParams gabor;
};

/// Column-stochastic transition matrix: p(to, from), row-major storage.
class MarkovGraph {
public:
  MarkovGraph() = default;
  MarkovGraph(std::size_t nodes, std::vector<double> p, std::size_t width = 0, std::size_t height = 0)
      : n_(nodes), width_(width ? width : nodes), height_(height ? height : 1), p_(std::move(p)) {
    if (p_.size() != n_ * n_) throw ParameterError("transition matrix must be n x n");
  }

  std::size_t nodes() const noexcept { return n_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  double operator()(std::size_t to, std::size_t from) const { return p_[to * n_ + from]; }
  std::span<const double> row(std::size_t to) const { return {p_.data() + to * n_, n_}; }

  /// Largest |column sum - 1|.
  double stochasticity_error() const {
    double worst = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_; ++i) s += p_[i * n_ + j];
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* r = p_.data() + i * n_;
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) acc += r[j] * x[j];
      y[i] = acc;
    }
    return y;
  }

private:
  std::size_t n_ = 0;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> p_;
};

struct Equilibrium {
  std::vector<double> distribution;  // sums to 1
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::vector<double> distance_kernel(std::size_t w, std::size_t h, double sigma) {
  const std::size_t n = w * h;
  std::vector<double> k(n * n);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = static_cast<double>(i % w), yi = static_cast<double>(i / w);
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = xi - static_cast<double>(j % w), dy = yi - static_cast<double>(j / w);
      k[i * n + j] = std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return k;
}

// Normalizes each column to sum to 1; an all-zero column becomes uniform.
inline void normalize_columns(std::vector<double>& p, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i * n + j];
    if (s > 0.0) {
      for (std::size_t i = 0; i < n; ++i) p[i * n + j] /= s;
    } else {
      for (std::size_t i = 0; i < n; ++i) p[i * n + j] = 1.0 / static_cast<double>(n);
    }
  }
}

inline bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace detail

/// Dissimilarity graph of a feature map:
/// w(from -> to) = |log(M(to)/M(from))| * exp(-dist^2 / (2 sigma^2)),
/// sigma = sigma_frac * width. Maps with a non-positive minimum are shifted so
/// the minimum becomes 1e-12. A constant map yields the uniform matrix.
inline MarkovGraph build_markov_graph(const DoubleGrid& map, double sigma_frac = 0.15) {
  const std::size_t n = map.size();
  if (n < 2) throw ParameterError("Markov graph needs at least 2 nodes");
  if (!(sigma_frac > 0.0)) throw ParameterError("sigma_frac must be > 0");
  if (detail::is_constant(map.values())) {
    return MarkovGraph(n, std::vector<double>(n * n, 1.0 / static_cast<double>(n)), map.width(), map.height());
  }
  std::vector<double> logv(n);
  const double mn = *std::min_element(map.begin(), map.end());
  const double shift = mn <= 0.0 ? 1e-12 - mn : 0.0;
  for (std::size_t i = 0; i < n; ++i) logv[i] = std::log(map[i] + shift);
  const double sigma = sigma_frac * static_cast<double>(map.width());
  std::vector<double> p = detail::distance_kernel(map.width(), map.height(), sigma);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] *= std::abs(logv[i] - logv[j]);
  }
  detail::normalize_columns(p, n);
  return MarkovGraph(n, std::move(p), map.width(), map.height());
}

/// Power iteration from the uniform vector until the L-inf change drops
/// below `tolerance` or `max_iterations` is reached.
inline Equilibrium equilibrium(const MarkovGraph& graph, double tolerance = 1e-6, std::size_t max_iterations = 10000) {
  const std::size_t n = graph.nodes();
  Equilibrium eq;
  eq.distribution.assign(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::vector<double> next = graph.apply(eq.distribution);
    double sum = 0.0;
    for (double v : next) sum += v;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= sum;
      change = std::max(change, std::abs(next[i] - eq.distribution[i]));
    }
    eq.distribution = std::move(next);
    eq.iterations = it + 1;
    if (change < tolerance) {
      eq.converged = true;
      break;
    }
  }
  return eq;
}

/// Activation map: equilibrium of the dissimilarity chain, map-shaped.
inline DoubleGrid activation_map(const DoubleGrid& map, const GbvsParams& p = {}) {
  const auto eq = equilibrium(build_markov_graph(map, p.sigma_frac), p.tolerance, p.max_iterations);
  return DoubleGrid(map.width(), map.height(), eq.distribution);
}

/// Chain whose transitions favour high-activation targets:
/// w(from -> to) = A(to) * exp(-dist^2 / (2 sigma^2)).
inline MarkovGraph concentration_graph(const DoubleGrid& activation, double sigma_frac = 0.15) {
  const std::size_t n = activation.size();
  if (n < 2) throw ParameterError("Markov graph needs at least 2 nodes");
  if (std::any_of(activation.begin(), activation.end(), [](double v) { return v < 0.0; })) {
    throw ParameterError("activation must be nonnegative");
  }
  if (detail::is_constant(activation.values())) {
    return MarkovGraph(n, std::vector<double>(n * n, 1.0 / static_cast<double>(n)), activation.width(),
                       activation.height());
  }
  const double sigma = sigma_frac * static_cast<double>(activation.width());
  std::vector<double> p = detail::distance_kernel(activation.width(), activation.height(), sigma);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] *= activation[i];
  }
  detail::normalize_columns(p, n);
  return MarkovGraph(n, std::move(p), activation.width(), activation.height());
}

/// Mass concentration of an activation map; a uniform activation stays uniform.
inline DoubleGrid concentrate_mass(const DoubleGrid& activation, const GbvsParams& p = {}) {
  const auto eq = equilibrium(concentration_graph(activation, p.sigma_frac), p.tolerance, p.max_iterations);
  return DoubleGrid(activation.width(), activation.height(), eq.distribution);
}

// ---------------------------------------------------------------- features

/// Gabor energy sqrt(even^2 + odd^2) at orientation `theta_deg`. At 0 degrees
/// the carrier varies along x, so vertical structures respond.
inline DoubleGrid gabor_energy(const FloatGrid& lum, double theta_deg, const GaborParams& g = {}) {
  const double th = theta_deg * std::numbers::pi / 180.0;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * g.sigma));
  const std::size_t side = static_cast<std::size_t>(2 * radius + 1);
  std::vector<double> even(side * side), odd(side * side);
  double even_mean = 0.0;
  for (std::ptrdiff_t y = -radius; y <= radius; ++y) {
    for (std::ptrdiff_t x = -radius; x <= radius; ++x) {
      const double xr = x * std::cos(th) + y * std::sin(th);
      const double yr = -x * std::sin(th) + y * std::cos(th);
      const double env = std::exp(-(xr * xr + g.aspect * g.aspect * yr * yr) / (2.0 * g.sigma * g.sigma));
      const std::size_t k = static_cast<std::size_t>((y + radius) * static_cast<std::ptrdiff_t>(side) + x + radius);
      even[k] = env * std::cos(2.0 * std::numbers::pi * xr / g.wavelength);
      odd[k] = env * std::sin(2.0 * std::numbers::pi * xr / g.wavelength);
      even_mean += even[k];
    }
  }
  even_mean /= static_cast<double>(side * side);
  for (auto& v : even) v -= even_mean;  // zero DC response

  const auto w = static_cast<std::ptrdiff_t>(lum.width()), h = static_cast<std::ptrdiff_t>(lum.height());
  DoubleGrid out(lum.width(), lum.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double re = 0.0, im = 0.0;
      for (std::ptrdiff_t ky = -radius; ky <= radius; ++ky) {
        const auto sy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y + ky, 0, h - 1));
        for (std::ptrdiff_t kx = -radius; kx <= radius; ++kx) {
          const auto sx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x + kx, 0, w - 1));
          const std::size_t k =
              static_cast<std::size_t>((ky + radius) * static_cast<std::ptrdiff_t>(side) + kx + radius);
          re += even[k] * lum(sx, sy);
          im += odd[k] * lum(sx, sy);
        }
      }
      out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = std::sqrt(re * re + im * im);
    }
  }
  return out;
}

/// Node-grid factor: the configured downsampling, raised if needed so the
/// node grid fits within max_nodes_x x max_nodes_y.
inline std::size_t node_factor(std::size_t width, std::size_t height, const GbvsParams& p) {
  std::size_t f = std::max<std::size_t>(1, p.downsample);
  while ((width + f - 1) / f > p.max_nodes_x || (height + f - 1) / f > p.max_nodes_y) ++f;
  return f;
}

/// Intensity, colour, orientation, flicker and motion maps on the node grid.
/// `previous` may be null (first frame: flicker is zero).
inline std::vector<FeatureMap> extract_feature_maps(const RgbImage& frame, const RgbImage* previous,
                                                    const VectorField& mean_flow, const GbvsParams& p = {}) {
  if (previous) require_same_shape(frame, *previous, "extract_feature_maps");
  require_same_shape(frame, mean_flow.u, "extract_feature_maps");
  const std::size_t f = node_factor(frame.width(), frame.height(), p);
  const FloatGrid lum = luma(frame);

  DoubleGrid intensity(frame.width(), frame.height());
  DoubleGrid color(frame.width(), frame.height());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    intensity[i] = lum[i] / 255.0;
    const double r = frame[i].r / 255.0, g = frame[i].g / 255.0, b = frame[i].b / 255.0;
    const double mx = std::max({r, g, b});
    if (mx > 0.0) {
      const double rg = std::abs(r - g) / mx;
      const double by = std::abs(b - std::min(r, g)) / mx;
      color[i] = 0.5 * (rg + by);
    } else {
      color[i] = 0.0;
    }
  }

  DoubleGrid orientation(frame.width(), frame.height(), 0.0);
  for (double theta : {0.0, 45.0, 90.0, 135.0}) {
    const DoubleGrid e = gabor_energy(lum, theta, p.gabor);
    for (std::size_t i = 0; i < e.size(); ++i) orientation[i] += 0.25 * e[i] / 255.0;
  }

  DoubleGrid flicker(frame.width(), frame.height(), 0.0);
  if (previous) {
    const FloatGrid prev = luma(*previous);
    for (std::size_t i = 0; i < flicker.size(); ++i) flicker[i] = std::abs(lum[i] - prev[i]) / 255.0;
  }

  DoubleGrid motion(frame.width(), frame.height());
  for (std::size_t i = 0; i < motion.size(); ++i) motion[i] = std::hypot(mean_flow.u[i], mean_flow.v[i]);

  return {{downsample_area(intensity, f), FeatureChannel::Intensity},
          {downsample_area(color, f), FeatureChannel::Color},
          {downsample_area(orientation, f), FeatureChannel::Orientation},
          {downsample_area(flicker, f), FeatureChannel::Flicker},
          {downsample_area(motion, f), FeatureChannel::Motion}};
}

/// Sum of concentrated activation maps over all channels, upsampled to frame
/// resolution. Not normalized.
inline SaliencyMap gbvs_saliency(const RgbImage& frame, const RgbImage* previous, const VectorField& mean_flow,
                                 const GbvsParams& p = {}) {
  const auto maps = extract_feature_maps(frame, previous, mean_flow, p);
  DoubleGrid sum(maps.front().values.width(), maps.front().values.height(), 0.0);
  for (const auto& m : maps) {
    const DoubleGrid conc = concentrate_mass(activation_map(m.values, p), p);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += conc[i];
  }
  DoubleGrid up = resize_bilinear(sum, frame.width(), frame.height());
  SaliencyMap out(frame.width(), frame.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(std::max(0.0, up[i]));
  return out;
}

}  // namespace avsal
