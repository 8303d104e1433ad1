#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "avsal/color.hpp"
#include "avsal/errors.hpp"
#include "avsal/grid.hpp"
#include "avsal/optical_flow.hpp"

namespace avsal {

/// Label grid; 0 is background, positive labels are regions.
struct SegmentationMap {
  Grid<int> labels;

  SegmentationMap() = default;
  explicit SegmentationMap(Grid<int> l) : labels(std::move(l)) {}

  std::size_t width() const noexcept { return labels.width(); }
  std::size_t height() const noexcept { return labels.height(); }

  std::vector<int> region_ids() const {
    std::set<int> ids;
    for (int l : labels) {
      if (l > 0) ids.insert(l);
    }
    return {ids.begin(), ids.end()};
  }

  std::size_t region_count() const { return region_ids().size(); }

  std::map<int, std::size_t> region_sizes() const {
    std::map<int, std::size_t> sizes;
    for (int l : labels) {
      if (l > 0) ++sizes[l];
    }
    return sizes;
  }
};

enum class HistogramSpace { Luv, Hsv };

struct Region {
  int id = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pixels;  // (x, y)
  PointF centroid;
  std::vector<double> histogram;  // bins^3, L1-normalized

  std::size_t size() const noexcept { return pixels.size(); }
};

struct MeanShiftParams {
  double spatial_bandwidth = 8.0;  // h_s, pixels
  double range_bandwidth = 8.0;    // h_r, LUV units
  int max_iterations = 20;
  double convergence = 0.1;  // stop when the joint-space shift is below this
};

namespace detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

// Relabels positive labels to 1..k in raster order of first appearance.
inline Grid<int> compact_labels(const Grid<int>& in) {
  std::map<int, int> remap;
  Grid<int> out(in.width(), in.height(), 0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] <= 0) continue;
    auto [it, inserted] = remap.try_emplace(in[i], static_cast<int>(remap.size()) + 1);
    out[i] = it->second;
  }
  return out;
}

struct Mode {
  double x, y, l, u, v;
};

}  // namespace detail

/// Per-pixel joint spatial-range mode seeking with a flat kernel:
/// neighbours within h_s (Chebyshev, spatial) and h_r (Euclidean, LUV).
inline Grid<detail::Mode> mean_shift_modes(const RgbImage& image, const MeanShiftParams& p = {}) {
  const Grid<color::Triple> luv = color::to_luv(image);
  const auto w = static_cast<std::ptrdiff_t>(image.width());
  const auto h = static_cast<std::ptrdiff_t>(image.height());
  const auto hs = static_cast<std::ptrdiff_t>(std::floor(p.spatial_bandwidth));
  const double hr2 = p.range_bandwidth * p.range_bandwidth;
  const double eps2 = p.convergence * p.convergence;
  Grid<detail::Mode> modes(image.width(), image.height());
  for (std::ptrdiff_t y0 = 0; y0 < h; ++y0) {
    for (std::ptrdiff_t x0 = 0; x0 < w; ++x0) {
      const auto& c0 = luv(static_cast<std::size_t>(x0), static_cast<std::size_t>(y0));
      detail::Mode m{static_cast<double>(x0), static_cast<double>(y0), c0.c0, c0.c1, c0.c2};
      for (int it = 0; it < p.max_iterations; ++it) {
        const auto cx = static_cast<std::ptrdiff_t>(std::lround(m.x));
        const auto cy = static_cast<std::ptrdiff_t>(std::lround(m.y));
        double sx = 0, sy = 0, sl = 0, su = 0, sv = 0;
        std::size_t n = 0;
        for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, cy - hs); y <= std::min(h - 1, cy + hs); ++y) {
          for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(0, cx - hs); x <= std::min(w - 1, cx + hs); ++x) {
            const auto& c = luv(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
            const double dl = c.c0 - m.l, du = c.c1 - m.u, dv = c.c2 - m.v;
            if (dl * dl + du * du + dv * dv > hr2) continue;
            sx += static_cast<double>(x);
            sy += static_cast<double>(y);
            sl += c.c0;
            su += c.c1;
            sv += c.c2;
            ++n;
          }
        }
        if (n == 0) break;
        const double inv = 1.0 / static_cast<double>(n);
        const detail::Mode next{sx * inv, sy * inv, sl * inv, su * inv, sv * inv};
        const double shift = (next.x - m.x) * (next.x - m.x) + (next.y - m.y) * (next.y - m.y) +
                             (next.l - m.l) * (next.l - m.l) + (next.u - m.u) * (next.u - m.u) +
                             (next.v - m.v) * (next.v - m.v);
        m = next;
        if (shift < eps2) break;
      }
      modes(static_cast<std::size_t>(x0), static_cast<std::size_t>(y0)) = m;
    }
  }
  return modes;
}

/// Mean-shift segmentation in LUV. 4-adjacent pixels whose modes lie within
/// one bandwidth of each other (spatially and in range) share a label; the
/// result is therefore a set of connected components labelled 1..k.
inline SegmentationMap mean_shift_segment(const RgbImage& image, const MeanShiftParams& p = {}) {
  if (image.empty()) throw ParameterError("mean_shift_segment on empty image");
  const auto modes = mean_shift_modes(image, p);
  const std::size_t w = image.width(), h = image.height();
  detail::UnionFind uf(w * h);
  const double hr2 = p.range_bandwidth * p.range_bandwidth;
  const double hs2 = p.spatial_bandwidth * p.spatial_bandwidth;
  auto close = [&](const detail::Mode& a, const detail::Mode& b) {
    const double dl = a.l - b.l, du = a.u - b.u, dv = a.v - b.v;
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dl * dl + du * du + dv * dv < hr2 && dx * dx + dy * dy < hs2;
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (x + 1 < w && close(modes(x, y), modes(x + 1, y))) uf.unite(y * w + x, y * w + x + 1);
      if (y + 1 < h && close(modes(x, y), modes(x, y + 1))) uf.unite(y * w + x, (y + 1) * w + x);
    }
  }
  Grid<int> labels(w, h);
  for (std::size_t i = 0; i < w * h; ++i) labels[i] = static_cast<int>(uf.find(i)) + 1;
  return SegmentationMap(detail::compact_labels(labels));
}

/// Merges 4-adjacent regions whose mean colours (CIE L*a*b*) differ by less
/// than `delta_e_threshold` (CIE76). The closest pair is merged first and the
/// process repeats until no adjacent pair is below the threshold.
inline SegmentationMap merge_regions(const SegmentationMap& seg, const RgbImage& image, double delta_e_threshold) {
  if (!(delta_e_threshold > 0.0)) throw ParameterError("delta_e_threshold must be > 0");
  require_same_shape(seg.labels, image, "merge_regions");
  struct Stats {
    double l = 0, a = 0, b = 0;
    std::size_t n = 0;
    color::Triple mean() const {
      const double k = 1.0 / static_cast<double>(n);
      return {l * k, a * k, b * k};
    }
  };
  std::map<int, Stats> stats;
  std::map<int, std::set<int>> adjacency;
  const std::size_t w = seg.width(), h = seg.height();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const int l = seg.labels(x, y);
      if (l <= 0) continue;
      const auto lab = color::rgb_to_lab(image(x, y));
      auto& s = stats[l];
      s.l += lab.c0;
      s.a += lab.c1;
      s.b += lab.c2;
      ++s.n;
      for (const auto& [nx, ny] : {std::pair{x + 1, y}, std::pair{x, y + 1}}) {
        if (nx >= w || ny >= h) continue;
        const int m = seg.labels(nx, ny);
        if (m > 0 && m != l) {
          adjacency[l].insert(m);
          adjacency[m].insert(l);
        }
      }
    }
  }
  std::map<int, int> owner;  // label -> surviving label
  for (const auto& [id, s] : stats) owner[id] = id;
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> pair{0, 0};
    for (const auto& [a, nbrs] : adjacency) {
      for (int b : nbrs) {
        if (b <= a) continue;
        const double d = color::delta_e76(stats[a].mean(), stats[b].mean());
        if (d < best) {
          best = d;
          pair = {a, b};
        }
      }
    }
    if (!(best < delta_e_threshold)) break;
    const auto [keep, gone] = pair;
    auto& sk = stats[keep];
    const auto& sg = stats[gone];
    sk.l += sg.l;
    sk.a += sg.a;
    sk.b += sg.b;
    sk.n += sg.n;
    for (int n : adjacency[gone]) {
      adjacency[n].erase(gone);
      if (n != keep) {
        adjacency[n].insert(keep);
        adjacency[keep].insert(n);
      }
    }
    adjacency[keep].erase(gone);
    adjacency.erase(gone);
    stats.erase(gone);
    for (auto& [id, o] : owner) {
      if (o == gone) o = keep;
    }
  }
  Grid<int> labels = seg.labels;
  for (auto& l : labels) {
    if (l > 0) l = owner[l];
  }
  return SegmentationMap(detail::compact_labels(labels));
}

/// Regions smaller than `min_pixels` become background; survivors are
/// relabelled 1..k. min_pixels = 0 returns the input unchanged.
inline SegmentationMap filter_small(const SegmentationMap& seg, std::size_t min_pixels = 200) {
  if (min_pixels == 0) return seg;
  const auto sizes = seg.region_sizes();
  Grid<int> labels = seg.labels;
  for (auto& l : labels) {
    if (l > 0 && sizes.at(l) < min_pixels) l = 0;
  }
  return SegmentationMap(detail::compact_labels(labels));
}

/// Regions whose mean flow speed is below `min_speed` become background
/// (the zero-flow white area of the colour-coded image).
inline SegmentationMap drop_static_regions(const SegmentationMap& seg, const VectorField& flow, double min_speed) {
  require_same_shape(seg.labels, flow.u, "drop_static_regions");
  std::map<int, std::pair<double, std::size_t>> speed;
  for (std::size_t i = 0; i < seg.labels.size(); ++i) {
    const int l = seg.labels[i];
    if (l <= 0) continue;
    auto& s = speed[l];
    s.first += std::hypot(flow.u[i], flow.v[i]);
    ++s.second;
  }
  Grid<int> labels = seg.labels;
  for (auto& l : labels) {
    if (l <= 0) continue;
    const auto& s = speed[l];
    if (s.first / static_cast<double>(s.second) < min_speed) l = 0;
  }
  return SegmentationMap(detail::compact_labels(labels));
}

/// Bin index of a pixel in a bins^3 colour histogram.
inline std::size_t histogram_bin(Rgb p, std::size_t bins, HistogramSpace space) {
  auto bin = [bins](double v, double lo, double hi) {
    const double t = (v - lo) / (hi - lo);
    const auto b = static_cast<std::ptrdiff_t>(std::floor(t * static_cast<double>(bins)));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1));
  };
  if (space == HistogramSpace::Luv) {
    const auto c = color::rgb_to_luv(p);
    return (bin(c.c0, 0.0, 100.0) * bins + bin(c.c1, -134.0, 220.0)) * bins + bin(c.c2, -140.0, 122.0);
  }
  const auto c = color::rgb_to_hsv(p);
  return (bin(c.c0, 0.0, 360.0) * bins + bin(c.c1, 0.0, 1.0)) * bins + bin(c.c2, 0.0, 1.0);
}

/// One Region per positive label: pixel list, centroid and an L1-normalized
/// bins^3 histogram of the source frame's colours over the region.
inline std::vector<Region> extract_regions(const SegmentationMap& seg, const RgbImage& frame, std::size_t bins = 8,
                                           HistogramSpace space = HistogramSpace::Luv) {
  require_same_shape(seg.labels, frame, "extract_regions");
  if (bins == 0) throw ParameterError("histogram bins must be >= 1");
  std::map<int, Region> regions;
  for (std::size_t y = 0; y < seg.height(); ++y) {
    for (std::size_t x = 0; x < seg.width(); ++x) {
      const int l = seg.labels(x, y);
      if (l <= 0) continue;
      auto& r = regions[l];
      if (r.histogram.empty()) {
        r.id = l;
        r.histogram.assign(bins * bins * bins, 0.0);
      }
      r.pixels.emplace_back(x, y);
      r.histogram[histogram_bin(frame(x, y), bins, space)] += 1.0;
    }
  }
  std::vector<Region> out;
  out.reserve(regions.size());
  for (auto& [id, r] : regions) {
    double sx = 0, sy = 0;
    for (const auto& [x, y] : r.pixels) {
      sx += static_cast<double>(x);
      sy += static_cast<double>(y);
    }
    const double n = static_cast<double>(r.pixels.size());
    r.centroid = {sx / n, sy / n};
    for (auto& v : r.histogram) v /= n;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace avsal
