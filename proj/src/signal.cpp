#include "uasep/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "fft_util.hpp"
#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"
#include "uasep/rng.hpp"

namespace uasep {

namespace {

std::size_t samples_for(double seconds, std::uint32_t fs) {
  return static_cast<std::size_t>(std::llround(seconds * fs));
}

void check_band(double f_hz, std::uint32_t fs, const char* what) {
  if (f_hz < 0.0 || f_hz > fs / 2.0)
    throw ParamError(std::string(what) + " outside [0, fs/2]");
}

// One chirp pulse written into x starting at sample n0. Instantaneous
// frequency sweeps f0 -> f1 linearly over dur_samples; phase starts at zero.
void add_chirp(std::vector<double>& x, std::size_t n0, std::size_t dur_samples,
               double f0, double f1, std::uint32_t fs) {
  const double dur_s = static_cast<double>(dur_samples) / fs;
  if (dur_samples == 0) return;
  const double rate = (f1 - f0) / dur_s;
  for (std::size_t i = 0; i < dur_samples; ++i) {
    const std::size_t n = n0 + i;
    if (n >= x.size()) break;
    const double tau = static_cast<double>(i) / fs;
    const double phase = 2.0 * std::numbers::pi * (f0 * tau + 0.5 * rate * tau * tau);
    x[n] += std::sin(phase);
  }
}

}  // namespace

TimeSignal gen_lfm(const LfmSpec& spec) {
  if (spec.sample_rate == 0) throw ParamError("lfm: sample_rate must be positive");
  if (spec.total_length_s <= 0.0) throw ParamError("lfm: total length must be positive");
  if (spec.duration_s <= 0.0) throw ParamError("lfm: duration must be positive");
  if (spec.launch_time_s < 0.0) throw ParamError("lfm: launch time must be nonnegative");
  check_band(spec.f_start_hz, spec.sample_rate, "lfm: start frequency");
  check_band(spec.f_end_hz, spec.sample_rate, "lfm: end frequency");

  TimeSignal out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(samples_for(spec.total_length_s, spec.sample_rate), 0.0);
  add_chirp(out.samples, samples_for(spec.launch_time_s, spec.sample_rate),
            samples_for(spec.duration_s, spec.sample_rate), spec.f_start_hz,
            spec.f_end_hz, spec.sample_rate);
  return out;
}

TimeSignal gen_lfm_train(double f_start_hz, double f_end_hz, double period_s,
                         double duty, double total_length_s, std::uint32_t sample_rate) {
  if (sample_rate == 0) throw ParamError("lfm_train: sample_rate must be positive");
  if (period_s <= 0.0) throw ParamError("lfm_train: period must be positive");
  if (duty <= 0.0 || duty > 1.0) throw ParamError("lfm_train: duty must be in (0, 1]");
  if (total_length_s <= 0.0) throw ParamError("lfm_train: total length must be positive");
  check_band(f_start_hz, sample_rate, "lfm_train: start frequency");
  check_band(f_end_hz, sample_rate, "lfm_train: end frequency");

  TimeSignal out;
  out.sample_rate = sample_rate;
  out.samples.assign(samples_for(total_length_s, sample_rate), 0.0);
  const std::size_t pulse = samples_for(duty * period_s, sample_rate);
  for (double t0 = 0.0; t0 < total_length_s; t0 += period_s)
    add_chirp(out.samples, samples_for(t0, sample_rate), pulse, f_start_hz, f_end_hz,
              sample_rate);
  return out;
}

TimeSignal gen_bandnoise(double low_hz, double high_hz, double total_length_s,
                         std::uint32_t sample_rate, std::uint64_t seed) {
  if (sample_rate == 0) throw ParamError("bandnoise: sample_rate must be positive");
  if (total_length_s <= 0.0) throw ParamError("bandnoise: total length must be positive");
  if (!(low_hz < high_hz)) throw ParamError("bandnoise: band must satisfy low < high");
  check_band(low_hz, sample_rate, "bandnoise: low edge");
  check_band(high_hz, sample_rate, "bandnoise: high edge");

  const std::size_t n = samples_for(total_length_s, sample_rate);
  Rng rng(seed);
  std::vector<double> white(n);
  for (auto& v : white) v = rng.gaussian();

  detail::RealDft dft(n);
  std::vector<std::complex<double>> half(dft.bins());
  dft.forward(white.data(), half.data());
  for (std::size_t k = 0; k < half.size(); ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    if (f < low_hz || f > high_hz) half[k] = 0.0;
  }
  TimeSignal out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  dft.inverse(half.data(), out.samples.data());
  return normalize(out);
}

TimeSignal normalize(const TimeSignal& x) {
  TimeSignal out = x;
  if (out.samples.empty()) return out;
  double mean = 0.0;
  for (double v : out.samples) mean += v;
  mean /= static_cast<double>(out.samples.size());
  double peak = 0.0;
  for (auto& v : out.samples) {
    v -= mean;
    peak = std::max(peak, std::abs(v));
  }
  if (peak < 1e-12) {
    std::fill(out.samples.begin(), out.samples.end(), 0.0);
    return out;
  }
  for (auto& v : out.samples) v /= peak;
  return out;
}

double power(const TimeSignal& x) {
  if (x.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x.samples) acc += v * v;
  return acc / static_cast<double>(x.samples.size());
}

std::vector<TimeSignal> mix(const std::vector<TimeSignal>& sources, const MixSpec& spec,
                            std::uint64_t seed) {
  if (sources.empty()) throw ParamError("mix: needs at least one source");
  const std::uint32_t fs = sources.front().sample_rate;
  std::size_t longest = 0;
  for (const auto& s : sources) {
    if (s.sample_rate != fs) throw ParamError("mix: sample rates differ");
    longest = std::max(longest, s.size());
  }

  std::vector<std::vector<double>> gains;  // R rows of C
  if (spec.mixing_matrix) {
    gains = *spec.mixing_matrix;
    if (gains.empty()) throw ParamError("mix: empty mixing matrix");
    for (const auto& row : gains)
      if (row.size() != sources.size())
        throw ParamError("mix: mixing matrix columns != source count");
  } else {
    std::vector<double> row = spec.coefficients;
    if (row.empty()) row.assign(sources.size(), 1.0);
    if (row.size() != sources.size())
      throw ParamError("mix: coefficient count != source count");
    gains.push_back(std::move(row));
  }

  Rng rng(seed);
  std::vector<TimeSignal> out;
  out.reserve(gains.size());
  for (const auto& row : gains) {
    TimeSignal obs;
    obs.sample_rate = fs;
    obs.samples.assign(longest, 0.0);
    for (std::size_t c = 0; c < sources.size(); ++c)
      for (std::size_t n = 0; n < sources[c].size(); ++n)
        obs.samples[n] += row[c] * sources[c].samples[n];
    if (spec.noise_snr_db && std::isfinite(*spec.noise_snr_db))
      obs = add_awgn(obs, *spec.noise_snr_db, rng.fork_seed());
    out.push_back(std::move(obs));
  }
  return out;
}

TimeSignal add_awgn(const TimeSignal& x, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) {
    if (snr_db > 0) return x;  // +inf: no noise
    throw ParamError("awgn: snr must be finite or +inf");
  }
  const double p = power(x);
  if (p <= 0.0) throw ParamError("awgn: snr undefined for an all-zero signal");
  const double noise_power = p / std::pow(10.0, snr_db / 10.0);
  const double sigma = std::sqrt(noise_power);
  Rng rng(seed);
  TimeSignal out = x;
  for (auto& v : out.samples) v += rng.gaussian(0.0, sigma);
  return out;
}

void write_signal_csv(const std::filesystem::path& path, const TimeSignal& x) {
  std::ostringstream out;
  out << "# sample_rate=" << x.sample_rate << "\n";
  for (double v : x.samples) out << fmt_double(v) << "\n";
  atomic_write(path, out.str());
}

TimeSignal read_signal_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty signal file: " + path.string());
  const std::string prefix = "# sample_rate=";
  if (line.rfind(prefix, 0) != 0)
    throw FormatError("missing sample_rate header: " + path.string());
  TimeSignal x;
  try {
    x.sample_rate = static_cast<std::uint32_t>(std::stoul(line.substr(prefix.size())));
  } catch (const std::exception&) {
    throw FormatError("bad sample_rate header: " + path.string());
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) throw FormatError("bad sample line: " + line);
    x.samples.push_back(v);
  }
  return x;
}

}  // namespace uasep
