#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>

#include "doctest.h"
#include "uasep/errors.hpp"
#include "uasep/metrics.hpp"

using namespace uasep;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Spectrogram spec1x4(std::initializer_list<double> mags) {
  Spectrogram s;
  s.num_frames = 1;
  s.num_bins = 4;
  s.frame_len = 6;
  s.hop = 3;
  s.sample_rate = 8000;
  for (double m : mags) s.bins.push_back({m, 0.0});
  return s;
}

BinaryMask mask1x4(std::initializer_list<int> cells) {
  BinaryMask m;
  m.num_frames = 1;
  m.num_bins = 4;
  for (int c : cells) m.cells.push_back(static_cast<std::uint8_t>(c));
  return m;
}

TimeSignal sig(std::vector<double> v) {
  TimeSignal x;
  x.sample_rate = 8000;
  x.samples = std::move(v);
  return x;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("preserved-signal ratio is the masked energy fraction") {
  const Spectrogram t = spec1x4({1, 1, 0, 0});
  CHECK(psr(mask1x4({1, 0, 0, 0}), t) == doctest::Approx(0.5));
  CHECK(psr(mask1x4({1, 1, 0, 0}), t) == doctest::Approx(1.0));
  CHECK(psr(mask1x4({0, 0, 1, 1}), t) == doctest::Approx(0.0));
  // magnitudes enter squared: keeping the 2 out of {2, 1} keeps 4/5
  CHECK(psr(mask1x4({1, 0, 0, 0}), spec1x4({2, 1, 0, 0})) == doctest::Approx(0.8));
  CHECK_THROWS_AS(psr(mask1x4({1, 0, 0, 0}), spec1x4({0, 0, 0, 0})), MetricError);
}

TEST_CASE("mask ratio divides masked target by masked interferer energy") {
  const Spectrogram t = spec1x4({2, 0, 1, 0});
  const Spectrogram i = spec1x4({1, 1, 0, 1});
  // mask {1,0,0,0}: target 4, interferer 1
  CHECK(sir_mask(mask1x4({1, 0, 0, 0}), t, i) == doctest::Approx(4.0));
  // mask keeping only bins where the interferer is silent -> +inf
  CHECK(sir_mask(mask1x4({0, 0, 1, 0}), t, i) == kInf);
  // mask keeping no target energy -> undefined
  CHECK_THROWS_AS(sir_mask(mask1x4({0, 1, 0, 0}), t, i), MetricError);
}

TEST_CASE("decibel conversions handle the edge values") {
  CHECK(sir_db(4.0) == doctest::Approx(10.0 * std::log10(4.0)));
  CHECK(sir_db(1.0) == doctest::Approx(0.0));
  CHECK(sir_db(kInf) == kInf);
  const Spectrogram t = spec1x4({2, 0, 0, 0});
  const Spectrogram i = spec1x4({1, 0, 0, 0});
  CHECK(input_sir_db(t, i) == doctest::Approx(10.0 * std::log10(4.0)));
}

TEST_CASE("similarity is the normalized zero-lag correlation") {
  const TimeSignal a = sig({1, 2, 3, 4});
  CHECK(similarity(a, a) == doctest::Approx(1.0));
  // scaling either side changes nothing
  CHECK(similarity(sig({2, 4, 6, 8}), a) == doctest::Approx(1.0));
  // sign flips are folded away by the magnitude
  CHECK(similarity(sig({-1, -2, -3, -4}), a) == doctest::Approx(1.0));
  // orthogonal signals score zero
  CHECK(similarity(sig({1, -1, 1, -1}), sig({1, 1, 1, 1})) == doctest::Approx(0.0));
  // known value: <{1,0},{1,1}> / sqrt(1*2) = 1/sqrt(2)
  CHECK(similarity(sig({1, 0}), sig({1, 1})) == doctest::Approx(1.0 / std::sqrt(2.0)));
  // length mismatch compares against the prefix
  CHECK(similarity(sig({1, 2}), sig({1, 2, 0, 0})) == doctest::Approx(1.0));
  // silent estimate scores zero; silent reference is undefined
  CHECK(similarity(sig({0, 0, 0}), a) == 0.0);
  CHECK_THROWS_AS(similarity(a, sig({0, 0, 0, 0})), MetricError);
}

TEST_CASE("alignment finds the crossed permutation") {
  const TimeSignal r0 = sig({1, 0, 1, 0, 1, 0});
  const TimeSignal r1 = sig({0, 1, 0, 1, 0, 1});
  // estimates arrive swapped and scaled
  const std::vector<TimeSignal> est = {sig({0, 2, 0, 2, 0, 2}), sig({3, 0, 3, 0, 3, 0})};
  const SeparationReport rep = align_and_report(est, {r0, r1});
  REQUIRE(rep.assignment.size() == 2);
  CHECK(rep.assignment[0] == 1);
  CHECK(rep.assignment[1] == 0);
  CHECK(rep.xi[0] == doctest::Approx(1.0));
  CHECK(rep.xi[1] == doctest::Approx(1.0));
  CHECK(rep.mean_xi == doctest::Approx(1.0));
  CHECK(rep.xi_matrix.rows() == 2);
  CHECK(rep.xi_matrix(0, 0) == doctest::Approx(0.0));
  CHECK(rep.xi_matrix(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("extra estimates are allowed, missing ones are not") {
  const TimeSignal r0 = sig({1, 0, 1, 0});
  const std::vector<TimeSignal> est3 = {sig({0, 1, 0, 1}), sig({1, 0, 1, 0}),
                                        sig({1, 1, 1, 1})};
  const SeparationReport rep = align_and_report(est3, {r0});
  REQUIRE(rep.assignment.size() == 1);
  CHECK(rep.assignment[0] == 1);
  CHECK(rep.xi[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(align_and_report({sig({1, 0})}, {r0, r0}), ParamError);
  CHECK_THROWS_AS(align_and_report({}, {r0}), ParamError);
}

TEST_CASE("mask metrics ride along when spectrograms are supplied") {
  const Spectrogram s0 = spec1x4({2, 0, 1, 0});
  const Spectrogram s1 = spec1x4({0, 3, 0, 1});
  const std::vector<BinaryMask> masks = {mask1x4({1, 0, 1, 0}), mask1x4({0, 1, 0, 1})};
  // ideal-ish estimates: use the reference content itself
  const TimeSignal e0 = sig({1, 2, 3, 4});
  const TimeSignal e1 = sig({4, 3, 2, 1});
  const SeparationReport rep =
      align_and_report({e0, e1}, {sig({1, 2, 3, 4}), sig({4, 3, 2, 1})}, masks, {s0, s1});
  REQUIRE(rep.psr.size() == 2);
  CHECK(rep.psr[0] == doctest::Approx(1.0));
  CHECK(rep.psr[1] == doctest::Approx(1.0));
  // masks separate the disjoint spectra perfectly
  CHECK(rep.sir_m[0] == kInf);
  CHECK(rep.sir_m[1] == kInf);
  CHECK(rep.sir_out_db[0] == kInf);
  CHECK(rep.mean_sir_m == doctest::Approx(kSirCap));  // capped average
  // input ratios: source 0 energy 5, source 1 energy 10
  CHECK(rep.sir_in_db[0] == doctest::Approx(10.0 * std::log10(0.5)));
  CHECK(rep.sir_in_db[1] == doctest::Approx(10.0 * std::log10(2.0)));
}

TEST_CASE("reports serialize with infinities intact") {
  const TimeSignal r0 = sig({1, 0, 1, 0});
  const TimeSignal r1 = sig({0, 1, 0, 1});
  const Spectrogram s0 = spec1x4({2, 0, 0, 0});
  const Spectrogram s1 = spec1x4({0, 3, 0, 0});
  const std::vector<BinaryMask> masks = {mask1x4({1, 0, 1, 1}), mask1x4({0, 1, 0, 0})};
  const SeparationReport rep = align_and_report({r0, r1}, {r0, r1}, masks, {s0, s1});

  const auto dir = std::filesystem::temp_directory_path();
  write_report_csv(dir / "uasep_report.csv", rep);
  write_report_json(dir / "uasep_report.json", rep);

  std::ifstream in(dir / "uasep_report.csv");
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "source,estimate,xi,psr,sir_m,sir_in_db,sir_out_db,sir_gain_db");
  std::string line;
  std::size_t rows = 0;
  bool saw_inf = false;
  while (std::getline(in, line)) {
    if (line.find("inf") != std::string::npos) saw_inf = true;
    ++rows;
  }
  CHECK(rows == 3);  // two sources + mean row
  CHECK(saw_inf);

  std::ifstream jin(dir / "uasep_report.json");
  std::string all((std::istreambuf_iterator<char>(jin)), {});
  CHECK(all.find("\"inf\"") != std::string::npos);
  CHECK(all.find("mean_xi") != std::string::npos);
}

}  // TEST_SUITE
