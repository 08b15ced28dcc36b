#ifndef UASEP_FEATURES_HPP
#define UASEP_FEATURES_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "uasep/stft.hpp"

namespace uasep {

// Geometry of the observation array for the normalized multi-channel feature.
struct FeatureConfig {
  std::size_t ref_channel = 0;  // index B
  double d_max_m = 1.0;
  double sound_speed_ms = 1500.0;

  // Phase-difference weight 4*pi*d_max/c, units of seconds.
  double beta() const { return 4.0 * 3.14159265358979323846 * d_max_m / sound_speed_ms; }
};

// (T*F) x D rows, row index = t*F + f. `weights` is 0 for low-energy bins
// (excluded from clustering), 1 otherwise.
struct FeatureMatrix {
  Eigen::MatrixXd rows;
  Eigen::VectorXd weights;
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
};

// Two-observation feature [magnitude ratio, frequency-normalized phase
// difference] per bin. Phase is the principal argument divided by 2*pi*f with
// f the physical bin frequency; bin 0 and low-magnitude reference bins get
// phase 0.
FeatureMatrix features_two_channel(const Spectrogram& x1, const Spectrogram& x2);

// Normalized complex multi-observation feature: per bin the channel vector
// |X_i| * exp(j*arg(X_i/X_B)/(beta*f)) scaled to unit L2 norm, emitted as
// interleaved re/im (D = 2n). All-zero bins come out as zero rows with
// weight 0.
FeatureMatrix features_multi_channel(const std::vector<Spectrogram>& xs,
                                     const FeatureConfig& cfg);

// Per-bin across-channel magnitude norm sqrt(sum_j |X_j|^2), row-major T x F.
std::vector<double> magnitude_normalizer(const std::vector<Spectrogram>& xs);

// Bins with norm below peak * 10^(-40/20) are flagged low-energy.
constexpr double kLowEnergyFloorDb = -40.0;

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& fm);

}  // namespace uasep

#endif  // UASEP_FEATURES_HPP
