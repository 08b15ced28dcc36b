#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "uasep/errors.hpp"
#include "uasep/features.hpp"

using namespace uasep;

namespace {

// frame_len 4 at 8 kHz: bins sit at 0, 2000, 4000 Hz
Spectrogram tiny_spec(std::size_t frames) {
  Spectrogram s;
  s.num_frames = frames;
  s.num_bins = 3;
  s.frame_len = 4;
  s.hop = 2;
  s.sample_rate = 8000;
  s.window = WindowKind::hann;
  s.bins.assign(frames * 3, {0.0, 0.0});
  return s;
}

Spectrogram random_spec(std::size_t frames, std::uint64_t seed) {
  Spectrogram s = tiny_spec(frames);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (auto& z : s.bins) z = {g(rng), g(rng)};
  return s;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("two-channel rows are magnitude ratio and scaled phase") {
  Spectrogram x1 = tiny_spec(1), x2 = tiny_spec(1);
  x1.at(0, 1) = {1.0, 0.0};
  x2.at(0, 1) = {0.0, 2.0};  // ratio 2, phase +pi/2 at 2000 Hz
  x1.at(0, 2) = {0.0, -3.0};
  x2.at(0, 2) = {0.0, -3.0};  // identical: ratio 1, phase 0

  const FeatureMatrix fm = features_two_channel(x1, x2);
  REQUIRE(fm.rows.rows() == 3);
  REQUIRE(fm.rows.cols() == 2);
  CHECK(fm.num_frames == 1);
  CHECK(fm.num_bins == 3);

  CHECK(fm.rows(1, 0) == doctest::Approx(2.0));
  CHECK(fm.rows(1, 1) ==
        doctest::Approx((std::numbers::pi / 2) / (2 * std::numbers::pi * 2000.0)));
  CHECK(fm.rows(2, 0) == doctest::Approx(1.0));
  CHECK(fm.rows(2, 1) == doctest::Approx(0.0));
}

TEST_CASE("two-channel phase is zero at dc and for a silent reference") {
  Spectrogram x1 = tiny_spec(1), x2 = tiny_spec(1);
  x1.at(0, 0) = {1.0, 1.0};
  x2.at(0, 0) = {-1.0, 0.5};  // dc: phase pinned to 0
  x2.at(0, 1) = {0.0, 4.0};   // x1 silent there: both entries 0

  const FeatureMatrix fm = features_two_channel(x1, x2);
  CHECK(fm.rows(0, 1) == 0.0);
  CHECK(fm.rows(0, 0) > 0.0);
  CHECK(fm.rows(1, 0) == 0.0);
  CHECK(fm.rows(1, 1) == 0.0);
}

TEST_CASE("bins 40 dB under the peak get weight zero") {
  Spectrogram x1 = tiny_spec(2), x2 = tiny_spec(2);
  x1.at(0, 1) = {100.0, 0.0};   // peak norm 100
  x1.at(0, 2) = {1.001, 0.0};   // just above the 1.0 floor
  x1.at(1, 1) = {0.999, 0.0};   // just below
  const FeatureMatrix fm = features_two_channel(x1, x2);
  CHECK(fm.weights(1) == 1.0);
  CHECK(fm.weights(2) == 1.0);
  CHECK(fm.weights(4) == 0.0);
  CHECK(fm.weights(0) == 0.0);  // silent bin
}

TEST_CASE("shape mismatch is rejected") {
  CHECK_THROWS_AS(features_two_channel(tiny_spec(1), tiny_spec(2)), ParamError);
  Spectrogram other = tiny_spec(1);
  other.sample_rate = 16000;
  CHECK_THROWS_AS(features_two_channel(tiny_spec(1), other), ParamError);
}

TEST_CASE("magnitude normalizer is the across-channel rms scale") {
  Spectrogram x1 = tiny_spec(1), x2 = tiny_spec(1);
  x1.at(0, 1) = {3.0, 0.0};
  x2.at(0, 1) = {0.0, 4.0};
  const auto norms = magnitude_normalizer({x1, x2});
  CHECK(norms[1] == doctest::Approx(5.0));
  CHECK(norms[0] == 0.0);
}

TEST_CASE("multi-channel rows have unit norm and compressed phase") {
  Spectrogram x1 = tiny_spec(1), x2 = tiny_spec(1);
  x1.at(0, 1) = {1.0, 0.0};
  x2.at(0, 1) = {0.0, 1.0};  // +pi/2 against the reference
  FeatureConfig cfg;
  cfg.d_max_m = 1.5;
  cfg.sound_speed_ms = 1500.0;  // beta = 4*pi*0.001

  const FeatureMatrix fm = features_multi_channel({x1, x2}, cfg);
  REQUIRE(fm.rows.cols() == 4);

  const double ang = (std::numbers::pi / 2) / (cfg.beta() * 2000.0);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  CHECK(fm.rows(1, 0) == doctest::Approx(inv_rt2));          // ref channel, phase 0
  CHECK(fm.rows(1, 1) == doctest::Approx(0.0));
  CHECK(fm.rows(1, 2) == doctest::Approx(inv_rt2 * std::cos(ang)));
  CHECK(fm.rows(1, 3) == doctest::Approx(inv_rt2 * std::sin(ang)));
  CHECK(fm.rows.row(1).norm() == doctest::Approx(1.0));

  // silent bins stay all-zero with weight 0
  CHECK(fm.rows.row(0).norm() == 0.0);
  CHECK(fm.weights(0) == 0.0);
}

TEST_CASE("every nonsilent multi-channel row is unit length") {
  const std::vector<Spectrogram> xs = {random_spec(5, 11), random_spec(5, 12),
                                       random_spec(5, 13)};
  const FeatureMatrix fm = features_multi_channel(xs, FeatureConfig{});
  REQUIRE(fm.rows.cols() == 6);
  for (Eigen::Index r = 0; r < fm.rows.rows(); ++r)
    CHECK(fm.rows.row(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("multi-channel validates its inputs") {
  CHECK_THROWS_AS(features_multi_channel({tiny_spec(1)}, FeatureConfig{}), ParamError);
  FeatureConfig bad;
  bad.ref_channel = 2;
  CHECK_THROWS_AS(features_multi_channel({tiny_spec(1), tiny_spec(1)}, bad), ParamError);
  FeatureConfig neg;
  neg.d_max_m = -1.0;
  CHECK_THROWS_AS(features_multi_channel({tiny_spec(1), tiny_spec(1)}, neg), ParamError);
}

TEST_CASE("feature csv carries one row per bin plus the weight column") {
  Spectrogram x1 = random_spec(2, 21), x2 = random_spec(2, 22);
  const FeatureMatrix fm = features_two_channel(x1, x2);
  const auto path = std::filesystem::temp_directory_path() / "uasep_features.csv";
  write_features_csv(path, fm);
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    CHECK(std::count(line.begin(), line.end(), ',') == 2);  // 2 features + weight
    ++rows;
  }
  CHECK(rows == 6);
}

}  // TEST_SUITE
