#ifndef UASEP_TRAINING_HPP
#define UASEP_TRAINING_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uasep/embednet.hpp"
#include "uasep/signal.hpp"
#include "uasep/stft.hpp"

namespace uasep {

// One entry of a training source pool. Generator sources are re-rendered per
// epoch with a fresh seed; wav sources are read once and cached.
struct SourceSpec {
  enum class Kind { wav, lfm, lfm_train, bandnoise };
  Kind kind = Kind::bandnoise;
  std::string path;          // wav
  double f_start_hz = 0.0;   // lfm, lfm_train
  double f_end_hz = 0.0;
  double launch_time_s = 0.0;  // lfm
  double duration_s = 0.0;     // lfm
  double period_s = 0.25;      // lfm_train
  double duty = 0.5;           // lfm_train
  double low_hz = 0.0;         // bandnoise
  double high_hz = 0.0;
};

TimeSignal render_source(const SourceSpec& spec, std::uint32_t sample_rate,
                         double clip_seconds, std::uint64_t seed);

struct DatasetSpec {
  std::vector<SourceSpec> source_pool;
  std::size_t min_sources = 2;
  std::size_t max_sources = 2;
  std::size_t mixtures_per_epoch = 8;
  std::uint32_t sample_rate = 8000;
  double clip_seconds = 2.0;
  double mix_noise_snr_db = 40.0;  // AWGN on the mixture; >= 1e9 disables
  double mix_noise_snr_lo_db = 40.0;  // < mix_noise_snr_db draws each
                                      // mixture's SNR uniformly from the range
  StftConfig stft{};
  double label_floor_db = -40.0;  // dominance labels: bins quieter than this
                                  // below the mixture peak get weight 0
  double log_floor_db = -60.0;    // floor for the log-magnitude net input
  std::uint64_t seed = 0;
};

struct TrainChunk {
  Eigen::MatrixXd frames;  // chunk_frames x F log-magnitude input
  LabelMatrix labels;
  std::size_t mixture_index = 0;
};

// Renders mixtures_per_epoch mixtures (uniform source count in
// [min_sources, max_sources], fresh seeds), computes log-magnitude inputs and
// ideal dominance labels, and cuts each into fixed-length chunks with the
// configured overlap. Chunk order is shuffled. Deterministic per epoch_seed.
std::vector<TrainChunk> build_epoch(const DatasetSpec& data, const TrainConfig& cfg,
                                    std::uint64_t epoch_seed);

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t chunk = 0;
  double loss = 0.0;  // per-labelled-bin-pair normalized
};

struct TrainResult {
  NetworkParams params;
  std::vector<LossRecord> history;
  std::vector<double> epoch_mean_loss;
  std::filesystem::path checkpoint_path;  // empty if no outdir given
};

// Full training loop: init, per-epoch chunk schedule, SGD with momentum on
// the size-normalized loss, optional per-epoch checkpointing into outdir.
TrainResult train(const DatasetSpec& data, const NetSpec& net, const TrainConfig& cfg,
                  const std::filesystem::path& outdir = {});

void write_loss_csv(const std::filesystem::path& path, const TrainResult& result);

}  // namespace uasep

#endif  // UASEP_TRAINING_HPP
