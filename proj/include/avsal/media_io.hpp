#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "avsal/errors.hpp"
#include "avsal/grid.hpp"

namespace avsal {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "raw dumps assume a little-endian host");

/// Decoded frames of one video. All frames share width/height.
struct VideoClip {
  std::vector<RgbImage> frames;
  std::size_t width = 0;
  std::size_t height = 0;
  double fps = 0.0;

  std::size_t frame_count() const noexcept { return frames.size(); }
};

/// Mono PCM audio scaled to [-1, 1].
struct AudioTrack {
  std::vector<float> samples;
  int sample_rate = 0;

  double duration() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Pooled gaze points per frame (0-based frame index).
struct FixationSet {
  std::vector<std::vector<PointF>> frames;
  std::size_t dropped = 0;  // out-of-bounds points rejected at load

  std::size_t frame_count() const noexcept { return frames.size(); }

  const std::vector<PointF>& points(std::size_t frame) const {
    static const std::vector<PointF> none;
    return frame < frames.size() ? frames[frame] : none;
  }

  std::size_t total() const noexcept {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.size();
    return n;
  }
};

using SaliencyMap = FloatGrid;

// ---------------------------------------------------------------- images

inline RgbImage from_mat(const cv::Mat& bgr) {
  RgbImage img(static_cast<std::size_t>(bgr.cols), static_cast<std::size_t>(bgr.rows));
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = Rgb{row[x][2], row[x][1], row[x][0]};
    }
  }
  return img;
}

inline cv::Mat to_mat(const RgbImage& img) {
  cv::Mat bgr(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC3);
  for (int y = 0; y < bgr.rows; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      const Rgb p = img(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      row[x] = cv::Vec3b(p.b, p.g, p.r);
    }
  }
  return bgr;
}

inline void write_mat(const fs::path& file, const cv::Mat& mat) {
  bool ok = false;
  try {
    ok = cv::imwrite(file.string(), mat);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + file.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + file.string());
}

inline RgbImage read_image(const fs::path& file) {
  const cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw FormatError("cannot decode image " + file.string());
  return from_mat(bgr);
}

inline void write_image(const RgbImage& img, const fs::path& file) { write_mat(file, to_mat(img)); }

namespace detail {

inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

inline bool is_frame_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".ppm" || ext == ".pnm";
}

// Files in `dir` whose stem is a decimal index, sorted by that index.
inline std::vector<std::pair<unsigned long long, fs::path>> indexed_files(const fs::path& dir,
                                                                          bool (*accept)(const fs::path&)) {
  std::vector<std::pair<unsigned long long, fs::path>> files;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw InputError("not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    const std::string stem = p.stem().string();
    if (!accept(p) || !all_digits(stem)) continue;
    files.emplace_back(std::stoull(stem), p);
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace detail

/// Loads zero-padded numbered frames (PNG or binary PPM) in index order.
/// `max_frames` = 0 loads everything.
inline VideoClip load_frame_sequence(const fs::path& dir, double fps, std::size_t max_frames = 0) {
  if (!(fps > 0.0)) throw ParameterError("fps must be > 0");
  auto files = detail::indexed_files(dir, &detail::is_frame_extension);
  if (max_frames > 0 && files.size() > max_frames) files.resize(max_frames);
  if (files.size() < 2) {
    throw InputError("need at least 2 frames in " + dir.string() + ", found " + std::to_string(files.size()));
  }
  VideoClip clip;
  clip.fps = fps;
  clip.frames.reserve(files.size());
  for (const auto& [index, path] : files) {
    RgbImage img = read_image(path);
    if (clip.frames.empty()) {
      clip.width = img.width();
      clip.height = img.height();
    } else if (img.width() != clip.width || img.height() != clip.height) {
      throw FormatError("frame " + path.filename().string() + " has size " + std::to_string(img.width()) + "x" +
                        std::to_string(img.height()) + ", expected " + std::to_string(clip.width) + "x" +
                        std::to_string(clip.height));
    }
    clip.frames.push_back(std::move(img));
  }
  return clip;
}

/// Writes frames as 000001.png, 000002.png, ...
inline void write_frame_sequence(const VideoClip& clip, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.png", i + 1);
    write_image(clip.frames[i], dir / name);
  }
}

// ---------------------------------------------------------------- WAV

enum class WavEncoding { Pcm16, Float32 };

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline std::vector<unsigned char> read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// RIFF/WAVE reader for PCM16 and float32, mono or stereo. Stereo is averaged.
inline AudioTrack load_wav(const fs::path& file) {
  const auto bytes = detail::read_file(file);
  const unsigned char* b = bytes.data();
  if (bytes.size() < 12 || std::memcmp(b, "RIFF", 4) != 0 || std::memcmp(b + 8, "WAVE", 4) != 0) {
    throw FormatError(file.string() + " is not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = b + pos;
    const std::size_t size = detail::read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw FormatError("truncated fmt chunk");
      format = detail::read_u16(b + body);
      channels = detail::read_u16(b + body + 2);
      rate = detail::read_u32(b + body + 4);
      bits = detail::read_u16(b + body + 14);
      if (format == 0xFFFE) {
        if (size < 40) throw FormatError("truncated WAVE_FORMAT_EXTENSIBLE header");
        format = detail::read_u16(b + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + size > bytes.size()) throw FormatError("data chunk extends past end of file");
      data = b + body;
      data_size = size;
    }
    pos = body + size + (size & 1U);
  }
  if (format == 0) throw FormatError("missing fmt chunk in " + file.string());
  if (data == nullptr) throw FormatError("missing data chunk in " + file.string());
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32) {
    throw FormatError("unsupported WAV encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
                      " bits); need PCM16 or float32");
  }
  if (channels < 1 || channels > 2) throw FormatError("unsupported channel count " + std::to_string(channels));
  if (rate == 0) throw FormatError("sample rate is zero");

  const std::size_t sample_bytes = bits / 8;
  const std::size_t frames = data_size / (sample_bytes * channels);
  AudioTrack track;
  track.sample_rate = static_cast<int>(rate);
  track.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + (i * channels + c) * sample_bytes;
      if (pcm16) {
        acc += static_cast<std::int16_t>(detail::read_u16(s)) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, s, 4);
        acc += v;
      }
    }
    track.samples[i] = static_cast<float>(acc / channels);
  }
  return track;
}

inline void write_wav(const AudioTrack& track, const fs::path& file, WavEncoding enc = WavEncoding::Pcm16,
                      std::uint16_t channels = 1) {
  if (track.sample_rate <= 0) throw ParameterError("sample rate must be > 0");
  const std::uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint32_t block = channels * bits / 8U;
  const auto data_size = static_cast<std::uint32_t>(track.samples.size() * block);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  detail::put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, enc == WavEncoding::Pcm16 ? 1 : 3);
  detail::put_u16(out, channels);
  detail::put_u32(out, static_cast<std::uint32_t>(track.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(track.sample_rate) * block);
  detail::put_u16(out, static_cast<std::uint16_t>(block));
  detail::put_u16(out, bits);
  out += "data";
  detail::put_u32(out, data_size);
  for (float s : track.samples) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      if (enc == WavEncoding::Pcm16) {
        const long q = std::lround(std::clamp(static_cast<double>(s), -1.0, 1.0) * 32767.0);
        detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        std::uint32_t bitsv;
        std::memcpy(&bitsv, &s, 4);
        detail::put_u32(out, bitsv);
      }
    }
  }
  std::ofstream f(file, std::ios::binary);
  if (!f) throw IoError("cannot write " + file.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + file.string());
}

// ---------------------------------------------------------------- fixations

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find(sep, start);
    parts.push_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return parts;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // strtod handles the formats written by common tools; require full consumption.
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads `frame,x,y` CSV. Points outside [0,width) x [0,height) are dropped
/// and counted in FixationSet::dropped.
inline FixationSet load_fixations(const fs::path& file, std::size_t width, std::size_t height) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open " + file.string());
  FixationSet set;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = detail::trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      const auto cols = detail::split(row, ',');
      if (cols.size() != 3 || cols[0] != "frame" || cols[1] != "x" || cols[2] != "y") {
        throw FormatError(file.string() + ": expected header 'frame,x,y'");
      }
      continue;
    }
    const auto cols = detail::split(row, ',');
    if (cols.size() != 3) throw FormatError(file.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    unsigned long long frame = 0;
    const auto [ptr, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), frame);
    const auto x = detail::parse_double(cols[1]);
    const auto y = detail::parse_double(cols[2]);
    if (ec != std::errc{} || ptr != cols[0].data() + cols[0].size() || !x || !y) {
      throw FormatError(file.string() + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (*x < 0.0 || *y < 0.0 || *x >= static_cast<double>(width) || *y >= static_cast<double>(height)) {
      ++set.dropped;
      continue;
    }
    if (set.frames.size() <= frame) set.frames.resize(frame + 1);
    set.frames[frame].push_back({*x, *y});
  }
  return set;
}

inline void write_fixations(const FixationSet& set, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "frame,x,y\n";
  out.precision(9);
  for (std::size_t f = 0; f < set.frames.size(); ++f) {
    for (const auto& p : set.frames[f]) out << f << ',' << p.x << ',' << p.y << '\n';
  }
  if (!out) throw IoError("write failed for " + file.string());
}

// ---------------------------------------------------------------- saliency maps

inline fs::path raw_dump_path(const fs::path& png) {
  fs::path p = png;
  p.replace_extension(".f32");
  return p;
}

inline void write_f32(const SaliencyMap& map, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(map.values().data()), static_cast<std::streamsize>(map.size() * sizeof(float)));
  if (!out) throw IoError("write failed for " + file.string());
}

inline SaliencyMap read_f32(const fs::path& file, std::size_t width, std::size_t height) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  std::vector<float> v(width * height);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(float)) || in.peek() != EOF) {
    throw FormatError(file.string() + ": size does not match " + std::to_string(width) + "x" + std::to_string(height));
  }
  return SaliencyMap(width, height, std::move(v));
}

/// Writes an 8-bit grayscale PNG (pixel = round(255 v)) and the lossless
/// `.f32` companion next to it. Values must lie in [0, 1].
inline void write_saliency_map(const SaliencyMap& map, const fs::path& png) {
  cv::Mat gray(static_cast<int>(map.height()), static_cast<int>(map.width()), CV_8UC1);
  for (std::size_t y = 0; y < map.height(); ++y) {
    for (std::size_t x = 0; x < map.width(); ++x) {
      const float v = map(x, y);
      if (!(v >= 0.0f && v <= 1.0f)) throw ParameterError("saliency map value outside [0,1]");
      gray.at<std::uint8_t>(static_cast<int>(y), static_cast<int>(x)) =
          static_cast<std::uint8_t>(std::lround(255.0 * static_cast<double>(v)));
    }
  }
  if (png.has_parent_path()) fs::create_directories(png.parent_path());
  write_mat(png, gray);
  write_f32(map, raw_dump_path(png));
}

/// Reads a map written by write_saliency_map; prefers the `.f32` companion.
inline SaliencyMap read_saliency_map(const fs::path& png) {
  const cv::Mat gray = cv::imread(png.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw FormatError("cannot decode " + png.string());
  const auto w = static_cast<std::size_t>(gray.cols);
  const auto h = static_cast<std::size_t>(gray.rows);
  const fs::path raw = raw_dump_path(png);
  if (fs::exists(raw)) return read_f32(raw, w, h);
  SaliencyMap map(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      map(x, y) = static_cast<float>(gray.at<std::uint8_t>(static_cast<int>(y), static_cast<int>(x)) / 255.0);
    }
  }
  return map;
}

/// Numbered maps (stem = 0-based frame index) found in `dir`.
inline std::vector<std::pair<std::size_t, SaliencyMap>> read_saliency_dir(const fs::path& dir) {
  auto files = detail::indexed_files(dir, [](const fs::path& p) { return p.extension() == ".png"; });
  std::vector<std::pair<std::size_t, SaliencyMap>> maps;
  maps.reserve(files.size());
  for (const auto& [index, path] : files) maps.emplace_back(static_cast<std::size_t>(index), read_saliency_map(path));
  return maps;
}

/// 16-bit grayscale PNG of a label grid (debug output).
inline void write_label_map(const Grid<int>& labels, const fs::path& png) {
  cv::Mat m(static_cast<int>(labels.height()), static_cast<int>(labels.width()), CV_16UC1);
  for (std::size_t y = 0; y < labels.height(); ++y) {
    for (std::size_t x = 0; x < labels.width(); ++x) {
      m.at<std::uint16_t>(static_cast<int>(y), static_cast<int>(x)) =
          static_cast<std::uint16_t>(std::clamp(labels(x, y), 0, 65535));
    }
  }
  write_mat(png, m);
}

inline Grid<int> read_label_map(const fs::path& png) {
  const cv::Mat m = cv::imread(png.string(), cv::IMREAD_UNCHANGED);
  if (m.empty() || m.type() != CV_16UC1) throw FormatError("not a 16-bit label map: " + png.string());
  Grid<int> labels(static_cast<std::size_t>(m.cols), static_cast<std::size_t>(m.rows));
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      labels(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = m.at<std::uint16_t>(y, x);
    }
  }
  return labels;
}

}  // namespace avsal
