#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "uasep/errors.hpp"
#include "uasep/metrics.hpp"
#include "uasep/pipeline.hpp"

using namespace uasep;

namespace {

// pure tone burst occupying [t0, t1) of a 1 s record at 8 kHz
TimeSignal burst(double hz, double t0, double t1) {
  TimeSignal x;
  x.sample_rate = 8000;
  x.samples.assign(8000, 0.0);
  const std::size_t a = static_cast<std::size_t>(t0 * 8000);
  const std::size_t b = static_cast<std::size_t>(t1 * 8000);
  for (std::size_t n = a; n < b; ++n)
    x.samples[n] = std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(n) / 8000.0);
  return x;
}

std::vector<TimeSignal> observe(const std::vector<TimeSignal>& srcs,
                                const std::vector<std::vector<double>>& matrix) {
  MixSpec spec;
  spec.mixing_matrix = matrix;
  return mix(srcs, spec, 1);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("classic two-channel separation recovers disjoint tones") {
  const TimeSignal s0 = burst(500.0, 0.0, 0.5);
  const TimeSignal s1 = burst(2000.0, 0.5, 1.0);
  const auto obs = observe({s0, s1}, {{1.0, 1.0}, {0.3, 3.0}});

  PipelineConfig cfg;
  cfg.k_clusters = 2;
  cfg.seed = 4;
  const SeparationResult res = separate(obs, cfg);

  REQUIRE(res.estimates.size() == 2);
  REQUIRE(res.masks.size() == 2);
  CHECK(res.estimates[0].size() == obs[0].size());
  CHECK(res.estimates[0].sample_rate == 8000);
  CHECK(res.assignment.labels.size() ==
        res.mixture_spec.num_frames * res.mixture_spec.num_bins);
  for (std::size_t i = 0; i < res.masks[0].cells.size(); ++i)
    CHECK(res.masks[0].cells[i] + res.masks[1].cells[i] == 1);

  const SeparationReport rep = align_and_report(res.estimates, {s0, s1});
  CHECK(rep.mean_xi > 0.95);
}

TEST_CASE("classic multi-channel separation uses the normalized feature") {
  const TimeSignal s0 = burst(500.0, 0.0, 0.5);
  const TimeSignal s1 = burst(2000.0, 0.5, 1.0);
  const auto obs = observe({s0, s1}, {{1.0, 1.0}, {0.2, 2.0}, {1.5, 0.4}});

  PipelineConfig cfg;
  cfg.k_clusters = 2;
  cfg.seed = 4;
  const SeparationResult res = separate(obs, cfg);
  REQUIRE(res.estimates.size() == 2);
  const SeparationReport rep = align_and_report(res.estimates, {s0, s1});
  CHECK(rep.mean_xi > 0.9);
}

TEST_CASE("classic path needs at least two observations") {
  PipelineConfig cfg;
  CHECK_THROWS_AS(separate({burst(500.0, 0.0, 1.0)}, cfg), ParamError);
  CHECK_THROWS_AS(separate({}, cfg), ParamError);
}

TEST_CASE("method deep without a network is a configuration error") {
  PipelineConfig cfg;
  cfg.method = Method::deep;
  const auto obs = observe({burst(500.0, 0.0, 0.5), burst(2000.0, 0.5, 1.0)},
                           {{1.0, 1.0}, {0.3, 3.0}});
  CHECK_THROWS_AS(separate(obs, cfg), ConfigError);
}

TEST_CASE("deep path embeds, clusters and reconstructs deterministically") {
  const TimeSignal s0 = burst(500.0, 0.0, 0.5);
  const TimeSignal s1 = burst(2000.0, 0.5, 1.0);
  const auto obs = observe({s0, s1}, {{1.0, 1.0}, {0.3, 3.0}});

  NetSpec spec;
  spec.arch = Architecture::rnn;
  spec.layers = 1;
  spec.hidden = 8;
  spec.embed_dim = 4;
  const NetworkParams net = init_params(spec, 129, 21);

  PipelineConfig cfg;
  cfg.method = Method::deep;
  cfg.k_clusters = 2;
  cfg.seed = 6;
  const SeparationResult a = separate(obs, cfg, net);
  REQUIRE(a.estimates.size() == 2);
  CHECK(a.estimates[0].size() == obs[0].size());
  for (std::size_t i = 0; i < a.masks[0].cells.size(); ++i)
    CHECK(a.masks[0].cells[i] + a.masks[1].cells[i] == 1);
  // the two masked estimates sum back to the reference observation away from
  // the synthesis edge taper
  for (std::size_t n = 256; n + 256 < obs[0].size(); ++n)
    CHECK(a.estimates[0].samples[n] + a.estimates[1].samples[n] ==
          doctest::Approx(obs[0].samples[n]).epsilon(1e-9).scale(1.0));

  const SeparationResult b = separate(obs, cfg, net);
  CHECK(a.assignment.labels == b.assignment.labels);

  // a network built for another frame size is rejected
  const NetworkParams wrong = init_params(spec, 100, 21);
  CHECK_THROWS_AS(separate(obs, cfg, wrong), ConfigError);
}

TEST_CASE("single-channel input is enough for the deep path") {
  const TimeSignal s0 = burst(500.0, 0.0, 0.5);
  NetSpec spec;
  spec.arch = Architecture::rnn;
  spec.layers = 1;
  spec.hidden = 4;
  spec.embed_dim = 3;
  const NetworkParams net = init_params(spec, 129, 2);
  PipelineConfig cfg;
  cfg.method = Method::deep;
  cfg.k_clusters = 2;
  const SeparationResult res = separate({s0}, cfg, net);
  CHECK(res.estimates.size() == 2);
}

}  // TEST_SUITE
