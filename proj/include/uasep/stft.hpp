#ifndef UASEP_STFT_HPP
#define UASEP_STFT_HPP

#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "uasep/signal.hpp"

namespace uasep {

enum class WindowKind : std::uint8_t { hann = 0, sqrt_hann = 1, hamming = 2, rect = 3 };

const char* window_name(WindowKind w);
WindowKind window_from_name(const std::string& name);

// Analysis configuration in milliseconds; frame/hop lengths in samples are
// derived per sample rate as round(ms * fs / 1000).
struct StftConfig {
  double frame_ms = 32.0;
  double hop_ms = 8.0;
  WindowKind window = WindowKind::hann;

  std::size_t frame_len(std::uint32_t sample_rate) const;
  std::size_t hop(std::uint32_t sample_rate) const;

  // Convenience for sample-count presets (e.g. 512-point, hop 128).
  static StftConfig from_samples(std::size_t frame, std::size_t hop,
                                 std::uint32_t sample_rate, WindowKind window);
};

// One-sided complex T x F spectrogram, F = frame_len/2 + 1, row-major
// (frame index t major). Frame t covers samples [t*hop, t*hop + frame_len)
// of the zero-padded-at-edges signal.
struct Spectrogram {
  std::size_t num_frames = 0;  // T
  std::size_t num_bins = 0;    // F
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::uint32_t sample_rate = 0;
  WindowKind window = WindowKind::hann;
  std::vector<std::complex<double>> bins;  // num_frames * num_bins

  std::complex<double>& at(std::size_t t, std::size_t f) { return bins[t * num_bins + f]; }
  const std::complex<double>& at(std::size_t t, std::size_t f) const {
    return bins[t * num_bins + f];
  }
  // Physical frequency of bin f in Hz.
  double bin_hz(std::size_t f) const {
    return static_cast<double>(f) * sample_rate / static_cast<double>(frame_len);
  }
};

// Periodic analysis window of the given kind.
std::vector<double> make_window(WindowKind kind, std::size_t length);

Spectrogram stft(const TimeSignal& x, const StftConfig& cfg);

// Overlap-add synthesis with the parameters carried by S. The analysis/
// synthesis window product must overlap-add to a constant within 1% in the
// interior (ConfigError otherwise); the output is normalized by the actual
// per-sample overlap-add sum, which reduces to the constant 0.5*frame/hop for
// Hann at exact 4:1 overlap. Output length is (T-1)*hop + frame_len.
TimeSignal istft(const Spectrogram& S);

// 20*log10(|bin|) floored at floor_db, row-major T x F.
std::vector<double> log_magnitude(const Spectrogram& S, double floor_db);

// Binary dump: magic "UASPEC1", u32 T, F, frame_len, hop, sample_rate,
// u8 window kind, then T*F (float32 re, float32 im) pairs row-major.
void write_spectrogram(const std::filesystem::path& path, const Spectrogram& S);
Spectrogram read_spectrogram(const std::filesystem::path& path);

// Magnitude as CSV (one frame per line) and as an 8-bit PGM image
// (rows = frequency, highest frequency on top, dB-scaled over `range_db`
// below the peak).
void write_magnitude_csv(const std::filesystem::path& path, const Spectrogram& S);
void write_spectrogram_pgm(const std::filesystem::path& path, const Spectrogram& S,
                           double range_db = 80.0);

}  // namespace uasep

#endif  // UASEP_STFT_HPP
