#ifndef UASEP_PIPELINE_HPP
#define UASEP_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "uasep/embednet.hpp"
#include "uasep/features.hpp"
#include "uasep/kmeans.hpp"
#include "uasep/masking.hpp"
#include "uasep/signal.hpp"
#include "uasep/stft.hpp"

namespace uasep {

enum class Method { classic, deep };

struct PipelineConfig {
  Method method = Method::classic;
  StftConfig stft{};
  std::size_t k_clusters = 2;
  FeatureConfig feature{};        // classic path geometry
  double log_floor_db = -60.0;    // deep path input floor
  double energy_floor_db = -40.0; // deep path clustering weight floor
  KmeansOptions kmeans{};
  std::uint64_t seed = 0;
};

struct SeparationResult {
  std::vector<TimeSignal> estimates;       // trimmed to the input length
  std::vector<BinaryMask> masks;           // one per cluster
  std::vector<Spectrogram> estimate_specs; // masked reference-channel STFTs
  Spectrogram mixture_spec;                // reference channel
  ClusterAssignment assignment;
};

// Classic path: STFT all channels, geometric features, weighted k-means,
// binary masks, ISTFT of the masked reference channel. Needs >= 2 channels.
SeparationResult separate(const std::vector<TimeSignal>& observations,
                          const PipelineConfig& cfg);

// Deep path: log-magnitude of the reference channel through the embedding
// network, k-means on the unit embeddings (low-energy bins weight 0), masks,
// ISTFT. Single-channel; extra channels beyond cfg.feature.ref_channel are
// ignored.
SeparationResult separate(const std::vector<TimeSignal>& observations,
                          const PipelineConfig& cfg, const NetworkParams& net);

}  // namespace uasep

#endif  // UASEP_PIPELINE_HPP
