#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "avsal/errors.hpp"
#include "avsal/filters.hpp"
#include "avsal/media_io.hpp"

namespace avsal {

/// One-sided STFT magnitudes, [window][bin], bins 0..window_len/2.
struct Spectrogram {
  std::vector<std::vector<double>> magnitudes;
  std::size_t window_len = 0;
  std::size_t hop = 0;

  std::size_t window_count() const noexcept { return magnitudes.size(); }
  std::size_t bin_count() const noexcept { return window_len / 2 + 1; }
};

/// Per-video-frame audio energy a(t).
struct AudioEnergyDescriptor {
  std::vector<double> values;
};

/// Window length giving roughly four windows per video frame, rounded up to a
/// power of two: 2^ceil(log2(sr / fps / 4)).
inline std::size_t stft_window_length(int sample_rate, double fps) {
  if (!(fps > 0.0)) throw ParameterError("fps must be > 0");
  if (sample_rate <= 0) throw ParameterError("sample rate must be > 0");
  const double target = static_cast<double>(sample_rate) / fps / 4.0;
  if (target <= 2.0) return 2;
  return std::size_t{1} << static_cast<unsigned>(std::ceil(std::log2(target)));
}

/// Splits audio into one slice per video frame; slice k covers samples
/// [floor(k sr/fps), floor((k+1) sr/fps)). Missing samples are zero.
inline std::vector<std::vector<float>> segment_audio(const AudioTrack& audio, double fps, std::size_t frame_count) {
  if (!(fps > 0.0)) throw ParameterError("fps must be > 0");
  if (audio.sample_rate <= 0) throw ParameterError("sample rate must be > 0");
  const double per_frame = static_cast<double>(audio.sample_rate) / fps;
  std::vector<std::vector<float>> slices;
  slices.reserve(frame_count);
  for (std::size_t k = 0; k < frame_count; ++k) {
    const auto begin = static_cast<std::size_t>(std::floor(static_cast<double>(k) * per_frame));
    const auto end = static_cast<std::size_t>(std::floor(static_cast<double>(k + 1) * per_frame));
    std::vector<float> slice(end - begin, 0.0f);
    for (std::size_t i = begin; i < end && i < audio.samples.size(); ++i) slice[i - begin] = audio.samples[i];
    slices.push_back(std::move(slice));
  }
  return slices;
}

namespace detail {

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace detail

/// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  }
  return w;
}

/// Hann-windowed STFT magnitudes with 50% overlap (hop = window_len / 2).
inline Spectrogram stft_spectrogram(std::span<const float> slice, std::size_t window_len) {
  if (window_len < 2 || window_len % 2 != 0) throw ParameterError("window length must be even and >= 2");
  if (slice.size() < window_len) throw ParameterError("slice shorter than one STFT window");
  Spectrogram spec;
  spec.window_len = window_len;
  spec.hop = window_len / 2;
  const auto window = hann_window(window_len);
  const bool pow2 = std::has_single_bit(window_len);
  std::vector<std::complex<double>> buf(window_len);
  for (std::size_t start = 0; start + window_len <= slice.size(); start += spec.hop) {
    for (std::size_t i = 0; i < window_len; ++i) buf[i] = {window[i] * slice[start + i], 0.0};
    if (pow2) {
      detail::fft(buf);
    } else {
      buf = detail::dft(buf);
    }
    std::vector<double> mags(spec.bin_count());
    for (std::size_t k = 0; k < mags.size(); ++k) mags[k] = std::abs(buf[k]);
    spec.magnitudes.push_back(std::move(mags));
  }
  return spec;
}

/// Spectral energy of one window, Parseval-scaled so that it equals the
/// windowed time-domain energy: (|X_0|^2 + 2 sum |X_k|^2 + |X_{N/2}|^2) / N.
inline double window_energy(std::span<const double> magnitudes, std::size_t window_len) {
  double e = 0.0;
  const std::size_t last = magnitudes.size() - 1;
  for (std::size_t k = 0; k < magnitudes.size(); ++k) {
    const double weight = (k == 0 || k == last) ? 1.0 : 2.0;
    e += weight * magnitudes[k] * magnitudes[k];
  }
  return e / static_cast<double>(window_len);
}

inline double spectrogram_energy(const Spectrogram& spec) {
  double e = 0.0;
  for (const auto& w : spec.magnitudes) e += window_energy(w, spec.window_len);
  return e;
}

/// Unsmoothed a(t): spectrogram energy of each frame's audio slice.
inline std::vector<double> frame_energies(const AudioTrack& audio, double fps, std::size_t frame_count) {
  const auto slices = segment_audio(audio, fps, frame_count);
  const std::size_t window_len = stft_window_length(audio.sample_rate, fps);
  std::vector<double> energy(frame_count, 0.0);
  for (std::size_t t = 0; t < slices.size(); ++t) energy[t] = spectrogram_energy(stft_spectrogram(slices[t], window_len));
  return energy;
}

/// a(t) for every frame of the clip, smoothed with a 1D Gaussian of
/// `sigma_frames`.
inline AudioEnergyDescriptor energy_descriptor(const AudioTrack& audio, double fps, std::size_t frame_count,
                                               double sigma_frames = 2.0) {
  const auto raw = frame_energies(audio, fps, frame_count);
  return {gaussian_smooth_1d(raw, sigma_frames)};
}

inline AudioEnergyDescriptor energy_descriptor(const AudioTrack& audio, const VideoClip& clip,
                                               double sigma_frames = 2.0) {
  return energy_descriptor(audio, clip.fps, clip.frame_count(), sigma_frames);
}

}  // namespace avsal
