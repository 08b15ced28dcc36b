#ifndef UASEP_SIGNAL_HPP
#define UASEP_SIGNAL_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace uasep {

// Sampled real waveform, amplitudes nominally in [-1, 1].
struct TimeSignal {
  std::vector<double> samples;
  std::uint32_t sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Linear chirp pulse embedded in a longer silent record.
struct LfmSpec {
  double f_start_hz = 0.0;
  double f_end_hz = 0.0;
  double launch_time_s = 0.0;
  double duration_s = 0.0;
  double total_length_s = 0.0;
  std::uint32_t sample_rate = 0;
};

// Linear mixing recipe. Without a mixing matrix the sources are summed with
// per-source coefficients into one observation; with an RxC matrix, R
// observations are produced. noise_snr_db, when set, adds white Gaussian noise
// to every observation (infinity = no noise).
struct MixSpec {
  std::vector<double> coefficients;
  std::optional<std::vector<std::vector<double>>> mixing_matrix;  // R rows of C
  std::optional<double> noise_snr_db;
};

// Chirp occupying [launch, launch+duration), zero elsewhere, sine convention
// with zero initial phase, unit amplitude.
TimeSignal gen_lfm(const LfmSpec& spec);

// Periodic train of identical chirp pulses: one pulse of `duty * period`
// seconds launched at the start of every period until total_length is filled.
TimeSignal gen_lfm_train(double f_start_hz, double f_end_hz, double period_s,
                         double duty, double total_length_s, std::uint32_t sample_rate);

// Gaussian noise band-limited to [low_hz, high_hz] (brick wall in the
// frequency domain), peak-normalized, deterministic per seed.
TimeSignal gen_bandnoise(double low_hz, double high_hz, double total_length_s,
                         std::uint32_t sample_rate, std::uint64_t seed);

// De-means, then scales so the peak magnitude is exactly 1. A signal whose
// de-meaned peak is below 1e-12 comes back all zero.
TimeSignal normalize(const TimeSignal& x);

// Mean of squared samples.
double power(const TimeSignal& x);

std::vector<TimeSignal> mix(const std::vector<TimeSignal>& sources, const MixSpec& spec,
                            std::uint64_t seed);

// x + white Gaussian noise at the requested SNR relative to power(x) over the
// full duration. snr_db = +infinity returns x unchanged.
TimeSignal add_awgn(const TimeSignal& x, double snr_db, std::uint64_t seed);

// CSV dump: first line "# sample_rate=<int>", then one sample per line.
void write_signal_csv(const std::filesystem::path& path, const TimeSignal& x);
TimeSignal read_signal_csv(const std::filesystem::path& path);

}  // namespace uasep

#endif  // UASEP_SIGNAL_HPP
