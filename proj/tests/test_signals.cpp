#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "uasep/errors.hpp"
#include "uasep/signal.hpp"
#include "uasep/wav.hpp"

using namespace uasep;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto d = fs::temp_directory_path() / "uasep_test_signals";
  fs::create_directories(d);
  return d;
}

// naive DFT magnitude at one frequency, the oracle for spectral peaks
double goertzel_mag(const std::vector<double>& x, std::size_t begin, std::size_t len,
                    double freq_hz, double fs) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) / fs;
    acc += x[begin + i] * std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi * freq_hz * t));
  }
  return std::abs(acc);
}

}  // namespace

TEST_SUITE("signals") {

TEST_CASE("lfm pulse occupies exactly its launch window") {
  LfmSpec spec{1000.0, 2000.0, 0.25, 0.5, 1.0, 8000};
  const TimeSignal x = gen_lfm(spec);
  REQUIRE(x.size() == 8000);
  CHECK(x.sample_rate == 8000);

  for (std::size_t n = 0; n < 2000; ++n) CHECK(x.samples[n] == 0.0);
  for (std::size_t n = 6000; n < 8000; ++n) CHECK(x.samples[n] == 0.0);
  // phase starts at zero: first in-pulse sample is sin(0)
  CHECK(x.samples[2000] == 0.0);
  CHECK(x.samples[2001] != 0.0);
  double peak = 0.0;
  for (double v : x.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak <= 1.0);
  CHECK(peak > 0.9);
}

TEST_CASE("lfm sweeps through its midpoint frequency") {
  // 1 kHz -> 2 kHz over the full second: instantaneous frequency at t=0.5 is
  // 1.5 kHz; a short window there must peak near 1.5 kHz
  LfmSpec spec{1000.0, 2000.0, 0.0, 1.0, 1.0, 8000};
  const TimeSignal x = gen_lfm(spec);
  double best_f = 0.0, best_mag = -1.0;
  for (double f = 1000.0; f <= 2000.0; f += 25.0) {
    const double m = goertzel_mag(x.samples, 3800, 400, f, 8000.0);
    if (m > best_mag) {
      best_mag = m;
      best_f = f;
    }
  }
  CHECK(best_f > 1400.0);
  CHECK(best_f < 1600.0);
}

TEST_CASE("lfm rejects bad parameters") {
  CHECK_THROWS_AS(gen_lfm({1000, 2000, 0, 0.5, 1.0, 0}), ParamError);
  CHECK_THROWS_AS(gen_lfm({1000, 2000, 0, 0.0, 1.0, 8000}), ParamError);
  CHECK_THROWS_AS(gen_lfm({1000, 2000, -0.1, 0.5, 1.0, 8000}), ParamError);
  CHECK_THROWS_AS(gen_lfm({1000, 5000, 0, 0.5, 1.0, 8000}), ParamError);  // Nyquist
  CHECK_THROWS_AS(gen_lfm({-10, 2000, 0, 0.5, 1.0, 8000}), ParamError);
}

TEST_CASE("lfm_train repeats the pulse every period") {
  const TimeSignal x = gen_lfm_train(1000, 1500, 0.25, 0.5, 1.0, 8000);
  REQUIRE(x.size() == 8000);
  // four pulses of 0.125 s; gaps dead silent
  for (int p = 0; p < 4; ++p) {
    const std::size_t start = static_cast<std::size_t>(p) * 2000;
    double energy = 0.0;
    for (std::size_t n = start; n < start + 1000; ++n) energy += x.samples[n] * x.samples[n];
    CHECK(energy > 100.0);
    for (std::size_t n = start + 1000; n < start + 2000; ++n) CHECK(x.samples[n] == 0.0);
  }
  // pulses are identical copies
  for (std::size_t n = 0; n < 1000; ++n) CHECK(x.samples[n] == x.samples[n + 2000]);
  CHECK_THROWS_AS(gen_lfm_train(1000, 1500, 0.25, 1.5, 1.0, 8000), ParamError);
  CHECK_THROWS_AS(gen_lfm_train(1000, 1500, 0.0, 0.5, 1.0, 8000), ParamError);
}

TEST_CASE("bandnoise stays inside its band") {
  const TimeSignal x = gen_bandnoise(500, 1500, 1.0, 8000, 7);
  REQUIRE(x.size() == 8000);
  double in_band = 0.0, out_band = 0.0;
  for (double f = 100; f < 4000; f += 100) {
    const double m = goertzel_mag(x.samples, 0, 8000, f, 8000.0);
    if (f >= 500 && f <= 1500)
      in_band += m * m;
    else
      out_band += m * m;
  }
  CHECK(out_band < 1e-12 * in_band);
  double peak = 0.0;
  for (double v : x.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bandnoise is deterministic per seed") {
  const TimeSignal a = gen_bandnoise(500, 1500, 0.25, 8000, 42);
  const TimeSignal b = gen_bandnoise(500, 1500, 0.25, 8000, 42);
  const TimeSignal c = gen_bandnoise(500, 1500, 0.25, 8000, 43);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  CHECK_THROWS_AS(gen_bandnoise(1500, 500, 1.0, 8000, 0), ParamError);
  CHECK_THROWS_AS(gen_bandnoise(500, 6000, 1.0, 8000, 0), ParamError);
}

TEST_CASE("normalize de-means and scales the peak to one") {
  TimeSignal x;
  x.sample_rate = 8000;
  x.samples = {1.0, 2.0, 3.0};
  const TimeSignal y = normalize(x);
  CHECK(y.samples[0] == doctest::Approx(-1.0));
  CHECK(y.samples[1] == doctest::Approx(0.0));
  CHECK(y.samples[2] == doctest::Approx(1.0));

  x.samples = {5.0, 5.0, 5.0};
  const TimeSignal z = normalize(x);
  for (double v : z.samples) CHECK(v == 0.0);
}

TEST_CASE("power is the mean square") {
  TimeSignal x;
  x.sample_rate = 8000;
  x.samples = {1.0, -1.0, 1.0, -1.0};
  CHECK(power(x) == 1.0);
  x.samples = {3.0, 0.0, 0.0, 0.0};
  CHECK(power(x) == doctest::Approx(2.25));
}

TEST_CASE("mix applies coefficients sample by sample") {
  TimeSignal a, b;
  a.sample_rate = b.sample_rate = 8000;
  a.samples = {1.0, 0.0, 2.0};
  b.samples = {0.0, 1.0};  // shorter: zero-padded
  MixSpec spec;
  spec.coefficients = {2.0, 3.0};
  const auto out = mix({a, b}, spec, 0);
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].size() == 3);
  CHECK(out[0].samples[0] == 2.0);
  CHECK(out[0].samples[1] == 3.0);
  CHECK(out[0].samples[2] == 4.0);
}

TEST_CASE("mix with a matrix yields one observation per row") {
  TimeSignal a, b;
  a.sample_rate = b.sample_rate = 8000;
  a.samples = {1.0, 2.0};
  b.samples = {3.0, 4.0};
  MixSpec spec;
  spec.mixing_matrix = {{1.0, 0.0}, {0.5, 0.5}};
  const auto out = mix({a, b}, spec, 0);
  REQUIRE(out.size() == 2);
  CHECK(out[0].samples[0] == 1.0);
  CHECK(out[0].samples[1] == 2.0);
  CHECK(out[1].samples[0] == 2.0);
  CHECK(out[1].samples[1] == 3.0);
}

TEST_CASE("mix validates its inputs") {
  TimeSignal a, b;
  a.sample_rate = 8000;
  b.sample_rate = 44100;
  a.samples = b.samples = {1.0};
  CHECK_THROWS_AS(mix({a, b}, MixSpec{}, 0), ParamError);
  b.sample_rate = 8000;
  MixSpec bad;
  bad.coefficients = {1.0};
  CHECK_THROWS_AS(mix({a, b}, bad, 0), ParamError);
  CHECK_THROWS_AS(mix({}, MixSpec{}, 0), ParamError);
}

TEST_CASE("awgn hits the requested noise power") {
  TimeSignal x;
  x.sample_rate = 8000;
  x.samples.resize(80000);
  for (std::size_t n = 0; n < x.size(); ++n)
    x.samples[n] = std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * 440.0 * n / 8000.0);
  const double p = power(x);
  CHECK(p == doctest::Approx(1.0).epsilon(1e-3));

  const TimeSignal y = add_awgn(x, 10.0, 99);
  TimeSignal noise = y;
  for (std::size_t n = 0; n < noise.size(); ++n) noise.samples[n] -= x.samples[n];
  CHECK(power(noise) == doctest::Approx(p / 10.0).epsilon(0.05));

  const TimeSignal clean = add_awgn(x, std::numeric_limits<double>::infinity(), 99);
  CHECK(clean.samples == x.samples);

  TimeSignal silent;
  silent.sample_rate = 8000;
  silent.samples.assign(100, 0.0);
  CHECK_THROWS_AS(add_awgn(silent, 10.0, 0), ParamError);
}

TEST_CASE("signal csv round trip is exact") {
  TimeSignal x;
  x.sample_rate = 44100;
  x.samples = {0.0, 1.0, -1.0, 0.1234567890123456, 1e-17, -3.5e8};
  const auto path = temp_dir() / "sig.csv";
  write_signal_csv(path, x);
  const TimeSignal y = read_signal_csv(path);
  CHECK(y.sample_rate == 44100);
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.samples[i] == x.samples[i]);

  std::ofstream(temp_dir() / "bad.csv") << "no header\n1.0\n";
  CHECK_THROWS_AS(read_signal_csv(temp_dir() / "bad.csv"), FormatError);
}

TEST_CASE("wav round trip preserves samples") {
  TimeSignal x;
  x.sample_rate = 8000;
  x.samples.resize(800);
  for (std::size_t n = 0; n < x.size(); ++n)
    x.samples[n] = 0.9 * std::sin(2.0 * std::numbers::pi * 440.0 * n / 8000.0);

  const auto p16 = temp_dir() / "a16.wav";
  write_wav(p16, x, 16);
  const TimeSignal y16 = read_wav(p16);
  CHECK(y16.sample_rate == 8000);
  REQUIRE(y16.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(y16.samples[i] - x.samples[i]) < 1.0 / 32768.0);

  const auto p32 = temp_dir() / "a32.wav";
  write_wav(p32, x, 32);
  const TimeSignal y32 = read_wav(p32);
  REQUIRE(y32.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(y32.samples[i] - x.samples[i]) < 1e-7);
}

TEST_CASE("stereo wav contributes channel 0") {
  // hand-assembled 2-channel PCM16 file: L = {1000, 2000}, R = {-1, -2}
  std::string wav;
  auto u16 = [&](std::uint16_t v) {
    wav.push_back(static_cast<char>(v & 0xff));
    wav.push_back(static_cast<char>(v >> 8));
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) wav.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  wav += "RIFF";
  u32(36 + 8);
  wav += "WAVEfmt ";
  u32(16);
  u16(1);
  u16(2);  // stereo
  u32(8000);
  u32(8000 * 4);
  u16(4);
  u16(16);
  wav += "data";
  u32(8);
  u16(1000);
  u16(static_cast<std::uint16_t>(-1));
  u16(2000);
  u16(static_cast<std::uint16_t>(-2));
  const auto path = temp_dir() / "stereo.wav";
  std::ofstream(path, std::ios::binary) << wav;

  const TimeSignal x = read_wav(path);
  REQUIRE(x.size() == 2);
  CHECK(x.samples[0] == doctest::Approx(1000.0 / 32768.0));
  CHECK(x.samples[1] == doctest::Approx(2000.0 / 32768.0));
}

TEST_CASE("wav reader rejects garbage") {
  const auto path = temp_dir() / "nota.wav";
  std::ofstream(path, std::ios::binary) << "RIFXjunkdata";
  CHECK_THROWS_AS(read_wav(path), FormatError);
}

}  // TEST_SUITE
