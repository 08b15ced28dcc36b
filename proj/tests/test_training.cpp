#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "uasep/errors.hpp"
#include "uasep/training.hpp"
#include "uasep/wav.hpp"

using namespace uasep;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto d = fs::temp_directory_path() / "uasep_test_training";
  fs::create_directories(d);
  return d;
}

SourceSpec band(double lo, double hi) {
  SourceSpec s;
  s.kind = SourceSpec::Kind::bandnoise;
  s.low_hz = lo;
  s.high_hz = hi;
  return s;
}

// two band-disjoint noise sources, short clips, tiny stft
DatasetSpec small_dataset() {
  DatasetSpec d;
  d.source_pool = {band(200.0, 600.0), band(1500.0, 2200.0), band(2800.0, 3400.0)};
  d.mixtures_per_epoch = 2;
  d.sample_rate = 8000;
  d.clip_seconds = 0.5;  // 4000 samples -> 60 frames at 256/64
  d.stft = StftConfig::from_samples(256, 64, 8000, WindowKind::hann);
  d.seed = 5;
  return d;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.chunk_frames = 30;
  cfg.chunk_overlap = 0.5;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("generator sources render at the requested length and rate") {
  SourceSpec lfm;
  lfm.kind = SourceSpec::Kind::lfm;
  lfm.f_start_hz = 1000;
  lfm.f_end_hz = 2000;
  lfm.launch_time_s = 0.1;
  lfm.duration_s = 0.2;
  const TimeSignal a = render_source(lfm, 8000, 0.5, 1);
  CHECK(a.size() == 4000);
  CHECK(a.sample_rate == 8000);
  double peak = 0.0;
  for (double v : a.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(1.0));

  SourceSpec train_spec;
  train_spec.kind = SourceSpec::Kind::lfm_train;
  train_spec.f_start_hz = 2000;
  train_spec.f_end_hz = 2600;
  train_spec.period_s = 0.25;
  train_spec.duty = 0.6;
  CHECK(render_source(train_spec, 8000, 2.0, 1).size() == 16000);

  const TimeSignal n1 = render_source(band(200, 600), 8000, 0.5, 7);
  const TimeSignal n2 = render_source(band(200, 600), 8000, 0.5, 7);
  const TimeSignal n3 = render_source(band(200, 600), 8000, 0.5, 8);
  CHECK(n1.samples == n2.samples);
  CHECK(n1.samples != n3.samples);
}

TEST_CASE("wav sources are loaded, length-fitted and normalized") {
  TimeSignal w;
  w.sample_rate = 8000;
  w.samples.assign(2000, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i)
    w.samples[i] = 0.25 * std::sin(2 * 3.14159265358979 * 440.0 * i / 8000.0);
  const auto path = temp_dir() / "tone.wav";
  write_wav(path, w, 32);

  SourceSpec spec;
  spec.kind = SourceSpec::Kind::wav;
  spec.path = path.string();
  const TimeSignal got = render_source(spec, 8000, 0.5, 1);
  CHECK(got.size() == 4000);  // padded out to the clip length
  double peak = 0.0;
  for (double v : got.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-6));  // normalized
  for (std::size_t i = 2000; i < 4000; ++i) CHECK(got.samples[i] == 0.0);

  CHECK_THROWS_AS(render_source(spec, 44100, 0.5, 1), ParamError);  // rate mismatch
}

TEST_CASE("an epoch is chunked, shuffled and fully labelled") {
  const DatasetSpec data = small_dataset();
  const TrainConfig cfg = small_config();
  const auto chunks = build_epoch(data, cfg, 77);

  // 60 frames, chunk 30, step 15 -> starts 0, 15 and 30 per mixture
  CHECK(chunks.size() == 2 * 3);
  std::set<std::size_t> mixtures;
  for (const auto& ch : chunks) {
    CHECK(ch.frames.rows() == 30);
    CHECK(ch.frames.cols() == 129);
    CHECK(ch.labels.onehot.rows() == 30 * 129);
    CHECK(ch.labels.onehot.cols() == 2);
    CHECK(ch.labels.weights.size() == 30 * 129);
    mixtures.insert(ch.mixture_index);
    // every positive-weight row is one-hot; zero-weight rows are empty
    for (Eigen::Index r = 0; r < ch.labels.onehot.rows(); ++r) {
      const double s = ch.labels.onehot.row(r).sum();
      if (ch.labels.weights(r) > 0.0) CHECK(s == 1.0);
      else CHECK(s == 0.0);
    }
    // log-magnitude input respects the floor
    CHECK(ch.frames.minCoeff() >= data.log_floor_db);
  }
  CHECK(mixtures == std::set<std::size_t>{0, 1});

  // the schedule is shuffled: across a few epoch seeds, at least one breaks
  // the natural mixture order
  bool any_shuffled = false;
  for (std::uint64_t es : {77ull, 78ull, 79ull}) {
    const auto cs = build_epoch(data, cfg, es);
    for (std::size_t i = 1; i < cs.size(); ++i)
      if (cs[i].mixture_index < cs[i - 1].mixture_index) any_shuffled = true;
  }
  CHECK(any_shuffled);

  // determinism
  const auto again = build_epoch(data, cfg, 77);
  REQUIRE(again.size() == chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i)
    CHECK((again[i].frames == chunks[i].frames));
  const auto other = build_epoch(data, cfg, 78);
  bool same = true;
  for (std::size_t i = 0; i < chunks.size(); ++i)
    if (other[i].frames != chunks[i].frames) same = false;
  CHECK(!same);
}

TEST_CASE("short clips fall back to a single truncated chunk") {
  DatasetSpec data = small_dataset();
  data.clip_seconds = 0.1;  // 800 samples -> 10 frames < chunk_frames
  const auto chunks = build_epoch(data, small_config(), 3);
  CHECK(chunks.size() == 2);
  for (const auto& ch : chunks) CHECK(ch.frames.rows() == 10);
}

TEST_CASE("epoch building validates the dataset") {
  DatasetSpec data = small_dataset();
  data.source_pool.clear();
  CHECK_THROWS_AS(build_epoch(data, small_config(), 1), ParamError);
  data = small_dataset();
  data.min_sources = 5;  // more than the pool holds
  CHECK_THROWS_AS(build_epoch(data, small_config(), 1), ParamError);
  data = small_dataset();
  data.min_sources = 0;
  CHECK_THROWS_AS(build_epoch(data, small_config(), 1), ParamError);
}

TEST_CASE("training runs, logs losses and checkpoints") {
  const DatasetSpec data = small_dataset();
  TrainConfig cfg = small_config();
  NetSpec net;
  net.arch = Architecture::rnn;  // cheapest for a smoke run
  net.layers = 1;
  net.hidden = 8;
  net.embed_dim = 4;

  const auto outdir = temp_dir() / "run1";
  fs::remove_all(outdir);
  const TrainResult res = train(data, net, cfg, outdir);

  CHECK(res.params.freq_bins == 129);
  CHECK(res.history.size() == 2 * 6);  // epochs * chunks
  CHECK(res.epoch_mean_loss.size() == 2);
  for (const auto& rec : res.history) {
    CHECK(std::isfinite(rec.loss));
    CHECK(rec.loss >= 0.0);
  }
  CHECK(fs::exists(res.checkpoint_path));
  CHECK(fs::exists(outdir / "loss.csv"));

  // the checkpoint reloads into the trained parameters
  const NetworkParams back = load_checkpoint(res.checkpoint_path);
  CHECK(checkpoint_digest(back) == checkpoint_digest(res.params));

  // loss log round trip: one line per record plus header
  std::ifstream in(outdir / "loss.csv");
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "epoch,chunk,loss");
  std::size_t n = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  CHECK(n == res.history.size());
}

TEST_CASE("training is deterministic per seed and moves the parameters") {
  const DatasetSpec data = small_dataset();
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  NetSpec net;
  net.arch = Architecture::rnn;
  net.layers = 1;
  net.hidden = 6;
  net.embed_dim = 3;

  const TrainResult a = train(data, net, cfg);
  const TrainResult b = train(data, net, cfg);
  CHECK(checkpoint_digest(a.params) == checkpoint_digest(b.params));
  CHECK(a.history.back().loss == b.history.back().loss);

  const NetworkParams fresh = init_params(net, 129, cfg.seed);
  CHECK(checkpoint_digest(a.params) != checkpoint_digest(fresh));

  TrainConfig other = cfg;
  other.seed = cfg.seed + 1;
  const TrainResult c = train(data, net, other);
  CHECK(checkpoint_digest(a.params) != checkpoint_digest(c.params));
}

}  // TEST_SUITE
