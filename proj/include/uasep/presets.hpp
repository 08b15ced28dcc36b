#ifndef UASEP_PRESETS_HPP
#define UASEP_PRESETS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uasep/pipeline.hpp"
#include "uasep/training.hpp"

namespace uasep::presets {

// ---- classic three-chirp scenario, two receivers, 50 kHz ----

std::vector<LfmSpec> lfm3_sources();

struct ClassicRun {
  std::vector<TimeSignal> observations;  // 2 channels
  std::vector<TimeSignal> images;        // per-source contribution at channel 0
  std::vector<Spectrogram> image_specs;
};

// Random 2x3 mixing (gains U[0.5, 1.5]), optional AWGN on each observation.
ClassicRun make_lfm3_run(std::optional<double> snr_db, std::uint64_t seed);

PipelineConfig lfm3_pipeline();  // classic, 512/128 hann, k = 3

// ---- desk-scale deep benchmark, 8 kHz ----

// Pool of six band-disjoint generators (four noise bands, two chirp trains),
// 2-source mixtures, 2 s clips, 40 dB mixture SNR.
DatasetSpec desk_dataset(std::uint64_t seed);
NetSpec desk_net(Architecture arch);
TrainConfig desk_train(std::uint64_t seed);

struct HeldOutMixture {
  TimeSignal mixture;  // observations[0]
  std::vector<TimeSignal> observations;  // two receivers, independent gains
  std::vector<TimeSignal> references;    // per-source images at receiver 0
  std::vector<Spectrogram> ref_specs;
  std::vector<std::size_t> pool_indices;
};

// Held-out mixture from the same pool: source subset, render seeds and noise
// all drawn from `seed`, disjoint from any training epoch stream.
HeldOutMixture make_heldout(const DatasetSpec& data, std::size_t num_sources,
                            std::optional<double> snr_db, std::uint64_t seed);

struct DeepEval {
  double mean_xi = 0.0;
  double mean_psr = 0.0;
  double mean_sir_m = 0.0;  // capped mean
  std::vector<double> per_mixture_xi;
};

// Separates `num_mixtures` held-out mixtures with the given network and
// averages the aligned metrics. With drop_worst set (the k = m+1 mode), the
// estimate correlating worst with every reference is discarded before
// alignment.
DeepEval eval_deep(const NetworkParams& net, const DatasetSpec& data, std::size_t k,
                   std::optional<double> snr_db, std::size_t num_mixtures,
                   std::uint64_t seed0, bool drop_worst = false);

// ---- named experiments (CLI `experiment --preset ...`) ----

struct ExperimentResult {
  std::vector<std::filesystem::path> outputs;
  std::string summary;
};

// table4: classic chirp scenario across noise levels -> metrics CSV
// table5: classic vs deep on desk mixtures -> metrics CSV
// table6: rnn vs lstm vs bilstm on the desk benchmark -> metrics CSV
// fig9:   training loss curves -> CSV
// fig10:  spectrogram and mask images for one desk mixture -> PGM set
// fig11:  deep benchmark metric vs noise level -> CSV
ExperimentResult run_experiment(const std::string& preset,
                                const std::filesystem::path& outdir,
                                std::uint64_t seed);

std::vector<std::string> experiment_names();

}  // namespace uasep::presets

#endif  // UASEP_PRESETS_HPP
