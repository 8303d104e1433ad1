#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "avsal/errors.hpp"
#include "avsal/grid.hpp"

namespace avsal {

/// Unnormalized Gaussian taps exp(-i^2 / 2 sigma^2) for i in [-radius, radius],
/// radius = ceil(3 sigma). Callers renormalize over the valid support.
inline std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma >= 0.0)) throw ParameterError("gaussian sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double d = static_cast<double>(i);
    taps[static_cast<std::size_t>(i + radius)] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return taps;
}

/// Truncated Gaussian smoothing of a series. Near the ends the kernel is
/// renormalized over the samples that exist, so constants stay constant.
inline std::vector<double> gaussian_smooth_1d(std::span<const double> series, double sigma) {
  const auto taps = gaussian_taps(sigma);
  if (sigma == 0.0) return {series.begin(), series.end()};
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  std::vector<double> out(series.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    double norm = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      const std::ptrdiff_t j = i + k;
      if (j < 0 || j >= n) continue;
      const double w = taps[static_cast<std::size_t>(k + radius)];
      acc += w * series[static_cast<std::size_t>(j)];
      norm += w;
    }
    out[static_cast<std::size_t>(i)] = acc / norm;
  }
  return out;
}

/// Separable Gaussian blur with the same edge renormalization as
/// gaussian_smooth_1d.
template <typename T>
Grid<T> gaussian_blur(const Grid<T>& in, double sigma) {
  const auto taps = gaussian_taps(sigma);
  if (sigma == 0.0 || in.empty()) return in;
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto w = static_cast<std::ptrdiff_t>(in.width());
  const auto h = static_cast<std::ptrdiff_t>(in.height());

  Grid<double> tmp(in.width(), in.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0, norm = 0.0;
      for (std::ptrdiff_t k = std::max(-radius, -x); k <= std::min(radius, w - 1 - x); ++k) {
        const double t = taps[static_cast<std::size_t>(k + radius)];
        acc += t * static_cast<double>(in(static_cast<std::size_t>(x + k), static_cast<std::size_t>(y)));
        norm += t;
      }
      tmp(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc / norm;
    }
  }
  Grid<T> out(in.width(), in.height());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0, norm = 0.0;
      for (std::ptrdiff_t k = std::max(-radius, -y); k <= std::min(radius, h - 1 - y); ++k) {
        const double t = taps[static_cast<std::size_t>(k + radius)];
        acc += t * tmp(static_cast<std::size_t>(x), static_cast<std::size_t>(y + k));
        norm += t;
      }
      out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = static_cast<T>(acc / norm);
    }
  }
  return out;
}

/// Rec. 601 luma in [0, 255].
inline FloatGrid luma(const RgbImage& img) {
  FloatGrid out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const Rgb p = img[i];
    out[i] = static_cast<float>(0.299 * p.r + 0.587 * p.g + 0.114 * p.b);
  }
  return out;
}

/// Box-average downsampling by an integer factor. Partial blocks at the
/// right/bottom edges average over the pixels they contain.
template <typename T>
Grid<T> downsample_area(const Grid<T>& in, std::size_t factor) {
  if (factor == 0) throw ParameterError("downsample factor must be >= 1");
  if (factor == 1) return in;
  const std::size_t ow = (in.width() + factor - 1) / factor;
  const std::size_t oh = (in.height() + factor - 1) / factor;
  Grid<double> acc(ow, oh, 0.0);
  Grid<std::size_t> cnt(ow, oh, 0);
  for (std::size_t y = 0; y < in.height(); ++y) {
    for (std::size_t x = 0; x < in.width(); ++x) {
      acc(x / factor, y / factor) += static_cast<double>(in(x, y));
      ++cnt(x / factor, y / factor);
    }
  }
  Grid<T> out(ow, oh);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(acc[i] / static_cast<double>(cnt[i]));
  return out;
}

/// Bilinear sample with edge clamping; (x, y) are pixel-center coordinates.
template <typename T>
double sample_bilinear(const Grid<T>& g, double x, double y) {
  const double maxx = static_cast<double>(g.width() - 1);
  const double maxy = static_cast<double>(g.height() - 1);
  x = std::clamp(x, 0.0, maxx);
  y = std::clamp(y, 0.0, maxy);
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x1 = std::min(x0 + 1, g.width() - 1);
  const std::size_t y1 = std::min(y0 + 1, g.height() - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = (1.0 - fx) * static_cast<double>(g(x0, y0)) + fx * static_cast<double>(g(x1, y0));
  const double bot = (1.0 - fx) * static_cast<double>(g(x0, y1)) + fx * static_cast<double>(g(x1, y1));
  return (1.0 - fy) * top + fy * bot;
}

/// Bilinear resize aligning pixel centers.
template <typename T>
Grid<T> resize_bilinear(const Grid<T>& in, std::size_t width, std::size_t height) {
  if (in.empty() || width == 0 || height == 0) throw ParameterError("resize of empty grid");
  Grid<T> out(width, height);
  const double sx = static_cast<double>(in.width()) / static_cast<double>(width);
  const double sy = static_cast<double>(in.height()) / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      out(x, y) = static_cast<T>(sample_bilinear(in, fx, fy));
    }
  }
  return out;
}

/// Summed-area table with a zero first row/column: (w+1) x (h+1).
template <typename T>
DoubleGrid integral_image(const Grid<T>& in) {
  DoubleGrid s(in.width() + 1, in.height() + 1, 0.0);
  for (std::size_t y = 0; y < in.height(); ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < in.width(); ++x) {
      row += static_cast<double>(in(x, y));
      s(x + 1, y + 1) = s(x + 1, y) + row;
    }
  }
  return s;
}

}  // namespace avsal
