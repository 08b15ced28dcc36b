#include "uasep/features.hpp"

#include <cmath>
#include <sstream>

#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"

namespace uasep {

namespace {

void check_compatible(const Spectrogram& a, const Spectrogram& b) {
  if (a.num_frames != b.num_frames || a.num_bins != b.num_bins ||
      a.frame_len != b.frame_len || a.sample_rate != b.sample_rate)
    throw ParamError("features: observation spectrograms disagree in shape or rate");
}

double energy_floor(const std::vector<double>& norms) {
  double peak = 0.0;
  for (double v : norms) peak = std::max(peak, v);
  return peak * std::pow(10.0, kLowEnergyFloorDb / 20.0);
}

}  // namespace

FeatureMatrix features_two_channel(const Spectrogram& x1, const Spectrogram& x2) {
  check_compatible(x1, x2);
  const std::size_t T = x1.num_frames, F = x1.num_bins, N = T * F;

  FeatureMatrix fm;
  fm.num_frames = T;
  fm.num_bins = F;
  fm.rows.resize(static_cast<Eigen::Index>(N), 2);
  fm.weights.resize(static_cast<Eigen::Index>(N));

  // low-energy floor on the two-channel magnitude norm
  std::vector<double> norms(N);
  for (std::size_t i = 0; i < N; ++i)
    norms[i] = std::hypot(std::abs(x1.bins[i]), std::abs(x2.bins[i]));
  const double floor = energy_floor(norms);

  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t n = t * F + f;
      const auto& a = x1.at(t, f);
      const auto& b = x2.at(t, f);
      const double mag1 = std::abs(a);
      double alpha = 0.0, phi = 0.0;
      if (mag1 > 1e-300) {
        alpha = std::abs(b) / mag1;
        // principal inter-channel phase, per unit physical frequency
        const double hz = x1.bin_hz(f);
        if (f > 0 && hz > 0.0)
          phi = std::arg(b / a) / (2.0 * 3.14159265358979323846 * hz);
      }
      fm.rows(static_cast<Eigen::Index>(n), 0) = alpha;
      fm.rows(static_cast<Eigen::Index>(n), 1) = phi;
      fm.weights(static_cast<Eigen::Index>(n)) = norms[n] >= floor ? 1.0 : 0.0;
    }
  return fm;
}

std::vector<double> magnitude_normalizer(const std::vector<Spectrogram>& xs) {
  if (xs.empty()) throw ParamError("features: no observations");
  for (const auto& x : xs) check_compatible(xs.front(), x);
  const std::size_t N = xs.front().bins.size();
  std::vector<double> norms(N, 0.0);
  for (const auto& x : xs)
    for (std::size_t i = 0; i < N; ++i) {
      const double m = std::abs(x.bins[i]);
      norms[i] += m * m;
    }
  for (auto& v : norms) v = std::sqrt(v);
  return norms;
}

FeatureMatrix features_multi_channel(const std::vector<Spectrogram>& xs,
                                     const FeatureConfig& cfg) {
  if (xs.size() < 2) throw ParamError("features: need at least two observations");
  if (cfg.ref_channel >= xs.size()) throw ParamError("features: ref_channel out of range");
  if (cfg.d_max_m <= 0 || cfg.sound_speed_ms <= 0)
    throw ParamError("features: geometry must be positive");
  for (const auto& x : xs) check_compatible(xs.front(), x);

  const std::size_t T = xs.front().num_frames, F = xs.front().num_bins;
  const std::size_t N = T * F, C = xs.size();
  const double beta = cfg.beta();

  FeatureMatrix fm;
  fm.num_frames = T;
  fm.num_bins = F;
  fm.rows.setZero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(2 * C));
  fm.weights.resize(static_cast<Eigen::Index>(N));

  const std::vector<double> norms = magnitude_normalizer(xs);
  const double floor = energy_floor(norms);
  const Spectrogram& ref = xs[cfg.ref_channel];

  std::vector<std::complex<double>> theta(C);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t n = t * F + f;
      const double norm = norms[n];
      fm.weights(static_cast<Eigen::Index>(n)) = norm >= floor ? 1.0 : 0.0;
      if (norm < 1e-300) continue;  // zero row stays zero

      const double hz = ref.bin_hz(f);
      const std::complex<double> r = ref.at(t, f);
      for (std::size_t c = 0; c < C; ++c) {
        const std::complex<double> z = xs[c].at(t, f);
        double ang = 0.0;
        // inter-channel phase compressed by 1/(beta*f); undefined at f=0 or
        // for a silent reference bin, where only the magnitude survives
        if (f > 0 && hz > 0.0 && std::abs(r) > 1e-300)
          ang = std::arg(z / r) / (beta * hz);
        theta[c] = std::polar(std::abs(z) / norm, ang);
      }
      for (std::size_t c = 0; c < C; ++c) {
        fm.rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 * c)) =
            theta[c].real();
        fm.rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 * c + 1)) =
            theta[c].imag();
      }
    }
  return fm;
}

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& fm) {
  std::ostringstream out;
  for (Eigen::Index r = 0; r < fm.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < fm.rows.cols(); ++c) out << fmt_double(fm.rows(r, c)) << ",";
    out << fmt_double(fm.weights(r)) << "\n";
  }
  atomic_write(path, out.str());
}

}  // namespace uasep
