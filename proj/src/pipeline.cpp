#include "uasep/pipeline.hpp"

#include <cmath>

#include "uasep/errors.hpp"

namespace uasep {

namespace {

void check_observations(const std::vector<TimeSignal>& obs) {
  if (obs.empty()) throw ParamError("separate: no observations");
  for (const auto& o : obs) {
    if (o.sample_rate != obs.front().sample_rate)
      throw ParamError("separate: observation sample rates differ");
    if (o.size() != obs.front().size())
      throw ParamError("separate: observation lengths differ");
  }
}

SeparationResult finish(const Spectrogram& ref_spec, const ClusterAssignment& assign,
                        std::size_t input_len) {
  SeparationResult res;
  res.mixture_spec = ref_spec;
  res.assignment = assign;
  res.masks = masks_from_assignment(assign, ref_spec.num_frames, ref_spec.num_bins);
  for (const auto& m : res.masks) {
    Spectrogram masked = apply_mask(m, ref_spec);
    TimeSignal y = istft(masked);
    y.samples.resize(input_len);  // synthesis pads past the input tail
    res.estimates.push_back(std::move(y));
    res.estimate_specs.push_back(std::move(masked));
  }
  return res;
}

}  // namespace

SeparationResult separate(const std::vector<TimeSignal>& observations,
                          const PipelineConfig& cfg) {
  check_observations(observations);
  if (cfg.method == Method::deep)
    throw ConfigError("separate: deep method needs a trained network");
  if (observations.size() < 2)
    throw ParamError("separate: the clustering features need at least two observations");
  if (cfg.feature.ref_channel >= observations.size())
    throw ParamError("separate: ref_channel out of range");
  if (cfg.k_clusters < 1) throw ParamError("separate: k_clusters must be positive");

  std::vector<Spectrogram> specs;
  specs.reserve(observations.size());
  for (const auto& o : observations) specs.push_back(stft(o, cfg.stft));

  // the normalized feature family: bounded rows keep K-means seeding off the
  // ratio outliers that near-silent reference bins produce
  const FeatureMatrix fm = features_multi_channel(specs, cfg.feature);
  const ClusterAssignment assign =
      kmeans(fm.rows, fm.weights, cfg.k_clusters, cfg.seed, cfg.kmeans);
  return finish(specs[cfg.feature.ref_channel], assign, observations.front().size());
}

SeparationResult separate(const std::vector<TimeSignal>& observations,
                          const PipelineConfig& cfg, const NetworkParams& net) {
  check_observations(observations);
  if (cfg.feature.ref_channel >= observations.size())
    throw ParamError("separate: ref_channel out of range");
  if (cfg.k_clusters < 1) throw ParamError("separate: k_clusters must be positive");

  const Spectrogram S = stft(observations[cfg.feature.ref_channel], cfg.stft);
  if (static_cast<int>(S.num_bins) != net.freq_bins)
    throw ConfigError("separate: network expects " + std::to_string(net.freq_bins) +
                      " bins, analysis yields " + std::to_string(S.num_bins));

  const std::vector<double> lm = log_magnitude(S, cfg.log_floor_db);
  Eigen::MatrixXd frames(S.num_frames, S.num_bins);
  for (std::size_t t = 0; t < S.num_frames; ++t)
    for (std::size_t f = 0; f < S.num_bins; ++f)
      frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) =
          lm[t * S.num_bins + f];

  const EmbeddingMatrix emb = embed(frames, net);

  // clustering weight: drop bins far under the mixture peak
  double peak = 0.0;
  for (const auto& z : S.bins) peak = std::max(peak, std::abs(z));
  const double floor = peak * std::pow(10.0, -std::abs(cfg.energy_floor_db) / 20.0);
  Eigen::VectorXd weights(static_cast<Eigen::Index>(S.bins.size()));
  for (std::size_t i = 0; i < S.bins.size(); ++i)
    weights(static_cast<Eigen::Index>(i)) = std::abs(S.bins[i]) >= floor ? 1.0 : 0.0;

  const ClusterAssignment assign =
      kmeans(emb.rows, weights, cfg.k_clusters, cfg.seed, cfg.kmeans);
  return finish(S, assign, observations.front().size());
}

}  // namespace uasep
