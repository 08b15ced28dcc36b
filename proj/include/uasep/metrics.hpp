#ifndef UASEP_METRICS_HPP
#define UASEP_METRICS_HPP

#include <cstddef>
#include <filesystem>
#include <limits>
#include <vector>

#include "uasep/masking.hpp"
#include "uasep/signal.hpp"
#include "uasep/stft.hpp"

namespace uasep {

// Cap applied to infinite ratios when averaging across runs; raw values keep
// the infinity.
inline constexpr double kSirCap = 1e12;

// Energy fraction of the target spectrogram preserved by the mask.
double psr(const BinaryMask& m, const Spectrogram& target);

// Masked target energy over masked interferer energy. +inf when the mask
// removes the interferer entirely; MetricError when it keeps no target.
double sir_mask(const BinaryMask& m, const Spectrogram& target,
                const Spectrogram& interferer);

// Unmasked target/interferer energy ratio in dB.
double input_sir_db(const Spectrogram& target, const Spectrogram& interferer);

double sir_db(double sir_ratio);  // 10*log10, +inf passes through

// Normalized cross-correlation at zero lag between an estimate and a
// reference, in [0, 1]. Shorter signal is compared against the other's
// prefix.
double similarity(const TimeSignal& estimate, const TimeSignal& reference);

struct SeparationReport {
  // One entry per reference source, after alignment.
  std::vector<std::size_t> assignment;  // assignment[j] = estimate index for ref j
  std::vector<double> xi;
  std::vector<double> psr;       // empty when masks/specs not supplied
  std::vector<double> sir_m;     // may contain +inf
  std::vector<double> sir_in_db;
  std::vector<double> sir_out_db;
  std::vector<double> sir_gain_db;
  Eigen::MatrixXd xi_matrix;  // estimates x references, pre-alignment
  double mean_xi = 0.0;
  double mean_psr = 0.0;
  double mean_sir_m = 0.0;  // capped at kSirCap before averaging
};

// Aligns estimates to references by the permutation (injection when counts
// differ) maximizing total xi, then fills per-source mask metrics when masks
// and per-source reference spectrograms are supplied (interferer spectrogram
// of source j = sum of the others). Exhaustive search; counts must stay
// small.
SeparationReport align_and_report(const std::vector<TimeSignal>& estimates,
                                  const std::vector<TimeSignal>& references,
                                  const std::vector<BinaryMask>& masks = {},
                                  const std::vector<Spectrogram>& ref_specs = {});

void write_report_csv(const std::filesystem::path& path, const SeparationReport& r);
void write_report_json(const std::filesystem::path& path, const SeparationReport& r);

}  // namespace uasep

#endif  // UASEP_METRICS_HPP
