#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "avsal/grid.hpp"

// sRGB (D65) conversions to CIE XYZ, L*a*b*, L*u*v* and HSV.

namespace avsal::color {

struct Triple {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline Triple rgb_to_xyz(Rgb p) {
  const double r = srgb_to_linear(p.r / 255.0);
  const double g = srgb_to_linear(p.g / 255.0);
  const double b = srgb_to_linear(p.b / 255.0);
  return {0.412453 * r + 0.357580 * g + 0.180423 * b,
          0.212671 * r + 0.715160 * g + 0.072169 * b,
          0.019334 * r + 0.119193 * g + 0.950227 * b};
}

inline constexpr double kWhiteX = 0.950456;
inline constexpr double kWhiteY = 1.0;
inline constexpr double kWhiteZ = 1.088754;

inline double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

/// L in [0,100].
inline Triple rgb_to_lab(Rgb p) {
  const Triple xyz = rgb_to_xyz(p);
  const double fx = lab_f(xyz.c0 / kWhiteX);
  const double fy = lab_f(xyz.c1 / kWhiteY);
  const double fz = lab_f(xyz.c2 / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// L in [0,100], u in about [-134,220], v in about [-140,122].
inline Triple rgb_to_luv(Rgb p) {
  const Triple xyz = rgb_to_xyz(p);
  const double yr = xyz.c1 / kWhiteY;
  const double l = yr > 0.008856 ? 116.0 * std::cbrt(yr) - 16.0 : 903.3 * yr;
  const double denom = xyz.c0 + 15.0 * xyz.c1 + 3.0 * xyz.c2;
  const double wden = kWhiteX + 15.0 * kWhiteY + 3.0 * kWhiteZ;
  const double un = 4.0 * kWhiteX / wden;
  const double vn = 9.0 * kWhiteY / wden;
  if (denom <= 0.0) return {l, 0.0, 0.0};
  const double up = 4.0 * xyz.c0 / denom;
  const double vp = 9.0 * xyz.c1 / denom;
  return {l, 13.0 * l * (up - un), 13.0 * l * (vp - vn)};
}

/// H in [0,360), S and V in [0,1].
inline Triple rgb_to_hsv(Rgb p) {
  const double r = p.r / 255.0, g = p.g / 255.0, b = p.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / d + 2.0);
    } else {
      h = 60.0 * ((r - g) / d + 4.0);
    }
    if (h < 0.0) h += 360.0;
  }
  return {h, mx > 0.0 ? d / mx : 0.0, mx};
}

/// CIE76 colour difference.
inline double delta_e76(const Triple& a, const Triple& b) {
  const double d0 = a.c0 - b.c0, d1 = a.c1 - b.c1, d2 = a.c2 - b.c2;
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

inline Grid<Triple> to_luv(const RgbImage& img) {
  Grid<Triple> out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = rgb_to_luv(img[i]);
  return out;
}

}  // namespace avsal::color
