#include "uasep/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"
#include "uasep/masking.hpp"
#include "uasep/rng.hpp"
#include "uasep/wav.hpp"

namespace uasep {

TimeSignal render_source(const SourceSpec& spec, std::uint32_t sample_rate,
                         double clip_seconds, std::uint64_t seed) {
  if (clip_seconds <= 0) throw ParamError("render: clip length must be positive");
  const auto want = static_cast<std::size_t>(std::llround(clip_seconds * sample_rate));
  switch (spec.kind) {
    case SourceSpec::Kind::wav: {
      TimeSignal x = read_wav(spec.path);
      if (x.sample_rate != sample_rate)
        throw ParamError("render: wav sample rate " + std::to_string(x.sample_rate) +
                         " != dataset rate " + std::to_string(sample_rate));
      // crop before normalizing, pad after: the padding stays exactly zero
      if (x.samples.size() > want) x.samples.resize(want);
      x = normalize(x);
      x.samples.resize(want, 0.0);
      return x;
    }
    case SourceSpec::Kind::lfm: {
      LfmSpec l;
      l.f_start_hz = spec.f_start_hz;
      l.f_end_hz = spec.f_end_hz;
      l.launch_time_s = spec.launch_time_s;
      l.duration_s = spec.duration_s;
      l.total_length_s = clip_seconds;
      l.sample_rate = sample_rate;
      return normalize(gen_lfm(l));
    }
    case SourceSpec::Kind::lfm_train:
      return normalize(gen_lfm_train(spec.f_start_hz, spec.f_end_hz, spec.period_s,
                                     spec.duty, clip_seconds, sample_rate));
    case SourceSpec::Kind::bandnoise:
      return gen_bandnoise(spec.low_hz, spec.high_hz, clip_seconds, sample_rate, seed);
  }
  throw ParamError("render: unknown source kind");
}

namespace {

Eigen::MatrixXd log_mag_frames(const Spectrogram& S, double floor_db) {
  const std::vector<double> lm = log_magnitude(S, floor_db);
  Eigen::MatrixXd out(S.num_frames, S.num_bins);
  for (std::size_t t = 0; t < S.num_frames; ++t)
    for (std::size_t f = 0; f < S.num_bins; ++f)
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) =
          lm[t * S.num_bins + f];
  return out;
}

LabelMatrix slice_labels(const LabelMatrix& lm, std::size_t t0, std::size_t len) {
  LabelMatrix out;
  out.num_frames = len;
  out.num_bins = lm.num_bins;
  const auto F = static_cast<Eigen::Index>(lm.num_bins);
  out.onehot = lm.onehot.middleRows(static_cast<Eigen::Index>(t0) * F,
                                    static_cast<Eigen::Index>(len) * F);
  out.weights = lm.weights.segment(static_cast<Eigen::Index>(t0) * F,
                                   static_cast<Eigen::Index>(len) * F);
  return out;
}

}  // namespace

std::vector<TrainChunk> build_epoch(const DatasetSpec& data, const TrainConfig& cfg,
                                    std::uint64_t epoch_seed) {
  if (data.source_pool.size() < data.max_sources)
    throw ParamError("dataset: pool smaller than max_sources");
  if (data.min_sources < 1 || data.min_sources > data.max_sources)
    throw ParamError("dataset: bad source count range");
  if (cfg.chunk_frames < 1) throw ParamError("dataset: chunk_frames must be positive");
  if (cfg.chunk_overlap < 0.0 || cfg.chunk_overlap >= 1.0)
    throw ParamError("dataset: chunk_overlap must be in [0, 1)");

  Rng rng(epoch_seed);
  std::vector<TrainChunk> chunks;
  for (std::size_t m = 0; m < data.mixtures_per_epoch; ++m) {
    const auto count = static_cast<std::size_t>(
        rng.uniform_int(data.min_sources, data.max_sources));

    std::vector<std::size_t> pool(data.source_pool.size());
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng.engine());
    pool.resize(count);

    // per-source gains and images at the (single) receiver
    std::vector<TimeSignal> images(count);
    for (std::size_t c = 0; c < count; ++c) {
      TimeSignal s = render_source(data.source_pool[pool[c]], data.sample_rate,
                                   data.clip_seconds, rng.fork_seed());
      const double gain = rng.uniform(0.75, 1.0);
      for (auto& v : s.samples) v *= gain;
      images[c] = std::move(s);
    }
    TimeSignal mixture = mix(images, MixSpec{}, 0).front();
    if (std::isfinite(data.mix_noise_snr_db) && data.mix_noise_snr_db < 1e9) {
      double snr = data.mix_noise_snr_db;
      if (data.mix_noise_snr_lo_db < snr)
        snr = rng.uniform(data.mix_noise_snr_lo_db, snr);
      mixture = add_awgn(mixture, snr, rng.fork_seed());
    }

    const Spectrogram S = stft(mixture, data.stft);
    const Eigen::MatrixXd frames = log_mag_frames(S, data.log_floor_db);
    std::vector<Spectrogram> image_specs;
    image_specs.reserve(count);
    for (const auto& img : images) image_specs.push_back(stft(img, data.stft));
    const LabelMatrix labels = ideal_labels(image_specs, data.label_floor_db);

    // fixed-length chunks; the tail is covered by one flush-right chunk, and
    // a clip shorter than a chunk becomes one truncated chunk
    const auto T = S.num_frames;
    const auto len = std::min<std::size_t>(cfg.chunk_frames, T);
    const auto step = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.chunk_frames *
                                                 (1.0 - cfg.chunk_overlap))));
    std::vector<std::size_t> starts;
    for (std::size_t t0 = 0; t0 + len <= T; t0 += step) starts.push_back(t0);
    if (starts.back() + len < T) starts.push_back(T - len);
    for (std::size_t t0 : starts) {
      TrainChunk ck;
      ck.frames = frames.middleRows(static_cast<Eigen::Index>(t0),
                                    static_cast<Eigen::Index>(len));
      ck.labels = slice_labels(labels, t0, len);
      ck.mixture_index = m;
      chunks.push_back(std::move(ck));
    }
  }
  std::shuffle(chunks.begin(), chunks.end(), rng.engine());
  return chunks;
}

TrainResult train(const DatasetSpec& data, const NetSpec& net, const TrainConfig& cfg,
                  const std::filesystem::path& outdir) {
  const std::size_t F = data.stft.frame_len(data.sample_rate) / 2 + 1;
  TrainResult result;
  result.params = init_params(net, static_cast<int>(F), cfg.seed);
  NetworkGrads velocity = zeros_like(result.params);

  Rng data_rng(data.seed);
  Rng drop_rng(cfg.seed + 0x9e3779b97f4a7c15ull);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto chunks = build_epoch(data, cfg, data_rng.fork_seed());
    double epoch_loss = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      const auto& ck = chunks[c];
      const double n_w = ck.labels.weights.sum();
      if (n_w <= 0.0) continue;  // silence: nothing to learn from

      DropoutSpec drop;
      drop.input_rate = cfg.dropout_input;
      drop.hidden_rate = cfg.dropout_hidden;
      drop.training = true;
      drop.seed = drop_rng.fork_seed();
      LossAndGrads lg = loss_and_gradients(ck.frames, ck.labels, result.params, drop);

      // step on the loss per labelled bin pair, so the step size is
      // insensitive to how full the chunk is
      const double scale = 1.0 / (n_w * n_w);
      auto tg = tensor_list(lg.grads);
      for (auto& t : tg) {
        if (t.mat) *t.mat *= scale;
        else *t.vec *= scale;
      }
      sgd_step(result.params, lg.grads, cfg, velocity);

      const double norm_loss = lg.loss * scale;
      result.history.push_back({epoch, c, norm_loss});
      epoch_loss += norm_loss;
      ++counted;
    }
    result.epoch_mean_loss.push_back(counted ? epoch_loss / counted : 0.0);
    if (!outdir.empty()) {
      std::filesystem::create_directories(outdir);
      save_checkpoint(outdir / "net_last.ckpt", result.params, epoch + 1, cfg.seed);
    }
  }

  if (!outdir.empty()) {
    result.checkpoint_path = outdir / "net_final.ckpt";
    save_checkpoint(result.checkpoint_path, result.params, cfg.epochs, cfg.seed);
    write_loss_csv(outdir / "loss.csv", result);
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const TrainResult& result) {
  std::ostringstream out;
  out << "epoch,chunk,loss\n";
  for (const auto& r : result.history)
    out << r.epoch << "," << r.chunk << "," << fmt_double(r.loss) << "\n";
  atomic_write(path, out.str());
}

}  // namespace uasep
