#ifndef UASEP_MASKING_HPP
#define UASEP_MASKING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "uasep/kmeans.hpp"
#include "uasep/stft.hpp"

namespace uasep {

// Binary T x F selection matrix, row-major like Spectrogram.
struct BinaryMask {
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  std::vector<std::uint8_t> cells;  // 0 or 1

  std::uint8_t at(std::size_t t, std::size_t f) const { return cells[t * num_bins + f]; }
  void set(std::size_t t, std::size_t f, std::uint8_t v) { cells[t * num_bins + f] = v; }
};

// One-hot (T*F) x C dominance labels with per-bin weights in [0,1]. Rows of
// weight 0 are all-zero and excluded from training losses and clustering.
struct LabelMatrix {
  Eigen::MatrixXd onehot;    // (T*F) x C, entries 0/1
  Eigen::VectorXd weights;   // length T*F
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
};

// One mask per cluster; mask k selects exactly the bins labeled k, so the
// masks partition the plane.
std::vector<BinaryMask> masks_from_assignment(const ClusterAssignment& assign,
                                              std::size_t num_frames, std::size_t num_bins);

Spectrogram apply_mask(const BinaryMask& m, const Spectrogram& x);

// Per bin, 1 for the source of maximal magnitude (ties to the lowest index).
// Bins whose mixture magnitude is more than |floor_db| below the loudest
// mixture bin get weight 0.
LabelMatrix ideal_labels(const std::vector<Spectrogram>& source_specs, double floor_db);

BinaryMask ideal_binary_mask(const std::vector<Spectrogram>& source_specs,
                             std::size_t target_index, double floor_db);

void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& m);
void write_mask_csv(const std::filesystem::path& path, const BinaryMask& m);

}  // namespace uasep

#endif  // UASEP_MASKING_HPP
