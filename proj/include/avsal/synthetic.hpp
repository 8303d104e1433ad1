#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "avsal/errors.hpp"
#include "avsal/grid.hpp"
#include "avsal/media_io.hpp"

// Desk-scale audiovisual clips: textured discs on a textured background, one
// of them "sounding". The sounding disc's speed follows an envelope and the
// audio is a tone whose amplitude is proportional to that speed.

namespace avsal {

enum class PathKind { Orbit, Linear };

struct SyntheticObject {
  PathKind path = PathKind::Orbit;
  double cx = 0.0;          // orbit centre, or start position for linear paths
  double cy = 0.0;
  double orbit_radius = 0.0;
  double direction = 0.0;   // degrees; linear paths only
  double phase = 0.0;       // degrees; orbit start angle
  double radius = 9.0;      // disc radius, px
  double base_speed = 0.0;  // px/frame
  double modulation = 0.0;  // px/frame added at envelope peak
  Rgb color{200, 60, 40};
};

struct SyntheticSpec {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t frames = 120;
  double fps = 30.0;
  int sample_rate = 16000;
  double tone_hz = 440.0;
  std::size_t bound = 0;          // index of the audio-bound object
  std::size_t participants = 8;   // fixations per frame
  double jitter = 2.0;            // fixation jitter, px
  double swell_period = 12.0;     // frames between envelope peaks
  double swell_decay = 0.3;       // per frame
  double texture_amplitude = 25.0;
  std::vector<SyntheticObject> objects;
};

struct SyntheticClip {
  VideoClip clip;
  AudioTrack audio;
  FixationSet fixations;
  std::vector<std::vector<PointF>> centers;  // [object][frame]
  std::vector<std::vector<double>> speeds;   // [object][frame], displacement t -> t+1
  std::vector<double> rms;                   // per-frame audio RMS
};

/// Two discs of similar luminance on diagonal orbits; disc 0 is audio-bound,
/// disc 1 moves at a constant speed close to disc 0's average.
inline SyntheticSpec two_disc_spec() {
  SyntheticSpec s;
  SyntheticObject a;
  a.cx = 18.0;
  a.cy = 18.0;
  a.orbit_radius = 3.0;
  a.radius = 11.0;
  a.base_speed = 1.0;
  a.modulation = 2.0;
  a.color = {210, 80, 80};
  SyntheticObject b = a;
  b.cx = 46.0;
  b.cy = 46.0;
  b.phase = 180.0;
  b.base_speed = 1.6;
  b.modulation = 0.0;
  b.color = {70, 170, 70};
  s.objects = {a, b};
  return s;
}

namespace detail {

inline std::vector<double> swell_envelope(const SyntheticSpec& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> height(0.35, 1.0);
  std::uniform_real_distribution<double> offset(-0.25, 0.25);
  std::vector<double> peaks;
  std::vector<double> heights;
  for (double c = 0.5 * s.swell_period; c < static_cast<double>(s.frames) + s.swell_period; c += s.swell_period) {
    peaks.push_back(c + offset(rng) * s.swell_period);
    heights.push_back(height(rng));
  }
  std::vector<double> env(s.frames, 0.0);
  for (std::size_t t = 0; t < s.frames; ++t) {
    for (std::size_t k = 0; k < peaks.size(); ++k) {
      env[t] = std::max(env[t], heights[k] * std::exp(-s.swell_decay * std::abs(static_cast<double>(t) - peaks[k])));
    }
  }
  return env;
}

inline PointF path_position(const SyntheticObject& o, double distance) {
  if (o.path == PathKind::Linear) {
    const double a = o.direction * std::numbers::pi / 180.0;
    return {o.cx + distance * std::cos(a), o.cy + distance * std::sin(a)};
  }
  if (o.orbit_radius <= 0.0) return {o.cx, o.cy};
  const double a = o.phase * std::numbers::pi / 180.0 + distance / o.orbit_radius;
  return {o.cx + o.orbit_radius * std::cos(a), o.cy + o.orbit_radius * std::sin(a)};
}

}  // namespace detail

inline void validate(const SyntheticSpec& s) {
  if (s.width < 8 || s.height < 8) throw InputError("synthetic spec: frame must be at least 8x8");
  if (s.frames < 2) throw InputError("synthetic spec: need at least 2 frames");
  if (!(s.fps > 0.0) || s.sample_rate <= 0) throw InputError("synthetic spec: fps and sample_rate must be > 0");
  if (s.objects.empty()) throw InputError("synthetic spec: no objects");
  if (s.bound >= s.objects.size()) throw InputError("synthetic spec: bound object index out of range");
  if (!(s.swell_period > 0.0) || !(s.swell_decay >= 0.0)) throw InputError("synthetic spec: bad envelope parameters");
  for (const auto& o : s.objects) {
    if (!(o.radius > 0.0)) throw InputError("synthetic spec: disc radius must be > 0");
    if (o.base_speed < 0.0 || o.modulation < 0.0) throw InputError("synthetic spec: speeds must be >= 0");
  }
}

/// Renders the clip, audio and fixations. Fully determined by spec + seed.
inline SyntheticClip synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  SyntheticClip out;
  const std::size_t n_obj = spec.objects.size();

  // Speeds and trajectories.
  out.speeds.assign(n_obj, std::vector<double>(spec.frames, 0.0));
  out.centers.assign(n_obj, std::vector<PointF>(spec.frames));
  for (std::size_t i = 0; i < n_obj; ++i) {
    const auto& o = spec.objects[i];
    const auto env = detail::swell_envelope(spec, rng);
    double dist = 0.0;
    for (std::size_t t = 0; t < spec.frames; ++t) {
      out.speeds[i][t] = o.base_speed + o.modulation * env[t];
      const PointF c = detail::path_position(o, dist);
      if (c.x - o.radius < 0.0 || c.y - o.radius < 0.0 || c.x + o.radius > static_cast<double>(spec.width - 1) ||
          c.y + o.radius > static_cast<double>(spec.height - 1)) {
        throw InputError("synthetic spec: object " + std::to_string(i) + " leaves the frame at frame " +
                         std::to_string(t));
      }
      out.centers[i][t] = c;
      dist += out.speeds[i][t];
    }
  }

  // Background texture: a few seeded plane waves.
  std::uniform_real_distribution<double> freq(0.04, 0.12), ph(0.0, 2.0 * std::numbers::pi);
  struct Wave {
    double fx, fy, phase;
  };
  std::vector<Wave> waves;
  for (int k = 0; k < 3; ++k) waves.push_back({freq(rng), freq(rng) * (k == 1 ? -1.0 : 1.0), ph(rng)});
  Grid<std::array<double, 3>> background(spec.width, spec.height);
  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      double t = 0.0;
      for (const auto& w : waves) {
        t += std::sin(2.0 * std::numbers::pi * (w.fx * static_cast<double>(x) + w.fy * static_cast<double>(y)) + w.phase);
      }
      const double g = 120.0 + spec.texture_amplitude * t / 3.0;
      background(x, y) = {g + 6.0, g, g - 6.0};
    }
  }

  // Frames: anti-aliased (4x4 supersampled) textured discs.
  out.clip.width = spec.width;
  out.clip.height = spec.height;
  out.clip.fps = spec.fps;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    Grid<std::array<double, 3>> px = background;
    for (std::size_t i = 0; i < n_obj; ++i) {
      const auto& o = spec.objects[i];
      const PointF c = out.centers[i][t];
      const auto x0 = static_cast<std::size_t>(std::max(0.0, std::floor(c.x - o.radius - 1)));
      const auto y0 = static_cast<std::size_t>(std::max(0.0, std::floor(c.y - o.radius - 1)));
      const auto x1 = std::min(spec.width - 1, static_cast<std::size_t>(std::ceil(c.x + o.radius + 1)));
      const auto y1 = std::min(spec.height - 1, static_cast<std::size_t>(std::ceil(c.y + o.radius + 1)));
      for (std::size_t y = y0; y <= y1; ++y) {
        for (std::size_t x = x0; x <= x1; ++x) {
          int inside = 0;
          for (int sy = 0; sy < 4; ++sy) {
            for (int sx = 0; sx < 4; ++sx) {
              const double dx = static_cast<double>(x) + (sx + 0.5) / 4.0 - 0.5 - c.x;
              const double dy = static_cast<double>(y) + (sy + 0.5) / 4.0 - 0.5 - c.y;
              inside += dx * dx + dy * dy <= o.radius * o.radius;
            }
          }
          if (inside == 0) continue;
          const double cov = inside / 16.0;
          // Texture in object coordinates so it travels with the disc.
          const double lx = static_cast<double>(x) - c.x, ly = static_cast<double>(y) - c.y;
          const double shade = 0.8 + 0.1 * std::cos(2.0 * std::numbers::pi * lx / 5.0) + 0.1 * std::cos(2.0 * std::numbers::pi * ly / 5.0);
          const std::array<double, 3> col{o.color.r * shade, o.color.g * shade, o.color.b * shade};
          for (std::size_t ch = 0; ch < 3; ++ch) px(x, y)[ch] = cov * col[ch] + (1.0 - cov) * px(x, y)[ch];
        }
      }
    }
    RgbImage img(spec.width, spec.height);
    for (std::size_t k = 0; k < img.size(); ++k) {
      auto q = [&](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
      img[k] = {q(px[k][0]), q(px[k][1]), q(px[k][2])};
    }
    out.clip.frames.push_back(std::move(img));
  }

  // Audio: tone with per-frame amplitude proportional to the bound disc's speed.
  const auto& bound_speed = out.speeds[spec.bound];
  const double max_speed = *std::max_element(bound_speed.begin(), bound_speed.end());
  out.audio.sample_rate = spec.sample_rate;
  const double per_frame = static_cast<double>(spec.sample_rate) / spec.fps;
  const auto total = static_cast<std::size_t>(std::floor(static_cast<double>(spec.frames) * per_frame));
  out.audio.samples.assign(total, 0.0f);
  out.rms.assign(spec.frames, 0.0);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double amp = max_speed > 0.0 ? 0.8 * bound_speed[t] / max_speed : 0.0;
    const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(t) * per_frame));
    const auto e = std::min(total, static_cast<std::size_t>(std::floor(static_cast<double>(t + 1) * per_frame)));
    double ss = 0.0;
    for (std::size_t n = b; n < e; ++n) {
      const double s =
          amp * std::sin(2.0 * std::numbers::pi * spec.tone_hz * static_cast<double>(n) / spec.sample_rate);
      out.audio.samples[n] = static_cast<float>(s);
      ss += s * s;
    }
    out.rms[t] = e > b ? std::sqrt(ss / static_cast<double>(e - b)) : 0.0;
  }

  // Fixations: jittered around the bound disc's centre.
  std::uniform_real_distribution<double> jit(-spec.jitter, spec.jitter);
  out.fixations.frames.resize(spec.frames);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const PointF c = out.centers[spec.bound][t];
    for (std::size_t p = 0; p < spec.participants; ++p) {
      const double x = std::clamp(c.x + jit(rng), 0.0, static_cast<double>(spec.width) - 1e-6);
      const double y = std::clamp(c.y + jit(rng), 0.0, static_cast<double>(spec.height) - 1e-6);
      out.fixations.frames[t].push_back({x, y});
    }
  }
  return out;
}

/// Pixels whose centre lies inside object `obj`'s disc at frame `t`.
inline Grid<std::uint8_t> object_mask(const SyntheticSpec& spec, const SyntheticClip& clip, std::size_t obj,
                                      std::size_t t) {
  Grid<std::uint8_t> m(spec.width, spec.height, 0);
  const PointF c = clip.centers[obj][t];
  const double r2 = spec.objects[obj].radius * spec.objects[obj].radius;
  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      const double dx = static_cast<double>(x) - c.x, dy = static_cast<double>(y) - c.y;
      m(x, y) = dx * dx + dy * dy <= r2;
    }
  }
  return m;
}

// ---------------------------------------------------------------- spec files

namespace detail {

inline SyntheticObject parse_object(const std::string& text) {
  SyntheticObject o;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw InputError("synthetic spec: object field must be key=value: '" + tok + "'");
    const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
    auto num = [&]() {
      const auto d = parse_double(v);
      if (!d) throw InputError("synthetic spec: bad number for '" + k + "': '" + v + "'");
      return *d;
    };
    if (k == "path") {
      if (v == "orbit") {
        o.path = PathKind::Orbit;
      } else if (v == "linear") {
        o.path = PathKind::Linear;
      } else {
        throw InputError("synthetic spec: path must be orbit or linear");
      }
    } else if (k == "cx") {
      o.cx = num();
    } else if (k == "cy") {
      o.cy = num();
    } else if (k == "orbit") {
      o.orbit_radius = num();
    } else if (k == "direction") {
      o.direction = num();
    } else if (k == "phase") {
      o.phase = num();
    } else if (k == "radius") {
      o.radius = num();
    } else if (k == "speed") {
      o.base_speed = num();
    } else if (k == "modulation") {
      o.modulation = num();
    } else if (k == "color") {
      const auto parts = split(v, ',');
      if (parts.size() != 3) throw InputError("synthetic spec: color must be r,g,b");
      std::array<std::uint8_t, 3> c{};
      for (std::size_t i = 0; i < 3; ++i) {
        const auto d = parse_double(parts[i]);
        if (!d || *d < 0 || *d > 255) throw InputError("synthetic spec: color component out of range");
        c[i] = static_cast<std::uint8_t>(*d);
      }
      o.color = {c[0], c[1], c[2]};
    } else {
      throw InputError("synthetic spec: unknown object field '" + k + "'");
    }
  }
  return o;
}

}  // namespace detail

/// `key = value` lines; each `object = path=orbit cx=.. cy=.. ...` line adds
/// one disc in order.
inline SyntheticSpec parse_synthetic_spec(std::istream& in) {
  SyntheticSpec s;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw InputError("synthetic spec: expected key = value: '" + std::string(t) + "'");
    const std::string key(detail::trim(t.substr(0, eq)));
    const std::string value(detail::trim(t.substr(eq + 1)));
    auto num = [&]() {
      const auto d = detail::parse_double(value);
      if (!d) throw InputError("synthetic spec: bad number for '" + key + "'");
      return *d;
    };
    auto count = [&]() {
      const double d = num();
      if (d < 0 || d != std::floor(d)) throw InputError("synthetic spec: '" + key + "' must be a non-negative integer");
      return static_cast<std::size_t>(d);
    };
    if (key == "object") {
      s.objects.push_back(detail::parse_object(value));
    } else if (key == "width") {
      s.width = count();
    } else if (key == "height") {
      s.height = count();
    } else if (key == "frames") {
      s.frames = count();
    } else if (key == "fps") {
      s.fps = num();
    } else if (key == "sample_rate") {
      s.sample_rate = static_cast<int>(count());
    } else if (key == "tone_hz") {
      s.tone_hz = num();
    } else if (key == "bound") {
      s.bound = count();
    } else if (key == "participants") {
      s.participants = count();
    } else if (key == "jitter") {
      s.jitter = num();
    } else if (key == "swell_period") {
      s.swell_period = num();
    } else if (key == "swell_decay") {
      s.swell_decay = num();
    } else if (key == "texture_amplitude") {
      s.texture_amplitude = num();
    } else {
      throw InputError("synthetic spec: unknown key '" + key + "'");
    }
  }
  validate(s);
  return s;
}

inline SyntheticSpec load_synthetic_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open synthetic spec " + file.string());
  return parse_synthetic_spec(in);
}

/// Writes frames/, audio.wav, fixations.csv and truth.csv (per-object
/// centre and speed per frame) under `dir`.
inline void write_synthetic(const SyntheticClip& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_frame_sequence(s.clip, dir / "frames");
  write_wav(s.audio, dir / "audio.wav", WavEncoding::Float32);
  write_fixations(s.fixations, dir / "fixations.csv");
  std::ofstream truth(dir / "truth.csv");
  if (!truth) throw IoError("cannot write " + (dir / "truth.csv").string());
  truth.precision(9);
  truth << "object,frame,cx,cy,speed\n";
  for (std::size_t i = 0; i < s.centers.size(); ++i) {
    for (std::size_t t = 0; t < s.centers[i].size(); ++t) {
      truth << i << ',' << t << ',' << s.centers[i][t].x << ',' << s.centers[i][t].y << ',' << s.speeds[i][t] << '\n';
    }
  }
}

}  // namespace avsal
