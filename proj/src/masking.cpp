#include "uasep/masking.hpp"

#include <cmath>
#include <sstream>

#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"

namespace uasep {

std::vector<BinaryMask> masks_from_assignment(const ClusterAssignment& assign,
                                              std::size_t num_frames,
                                              std::size_t num_bins) {
  if (assign.labels.size() != num_frames * num_bins)
    throw ParamError("masks: label count != num_frames * num_bins");
  const auto k = static_cast<std::size_t>(assign.centers.rows());
  std::vector<BinaryMask> masks(k);
  for (auto& m : masks) {
    m.num_frames = num_frames;
    m.num_bins = num_bins;
    m.cells.assign(num_frames * num_bins, 0);
  }
  for (std::size_t i = 0; i < assign.labels.size(); ++i) {
    const std::uint32_t l = assign.labels[i];
    if (l >= k) throw ParamError("masks: label out of range");
    masks[l].cells[i] = 1;
  }
  return masks;
}

Spectrogram apply_mask(const BinaryMask& m, const Spectrogram& x) {
  if (m.num_frames != x.num_frames || m.num_bins != x.num_bins)
    throw ParamError("mask: shape mismatch");
  Spectrogram out = x;
  for (std::size_t i = 0; i < out.bins.size(); ++i)
    if (!m.cells[i]) out.bins[i] = 0.0;
  return out;
}

LabelMatrix ideal_labels(const std::vector<Spectrogram>& source_specs, double floor_db) {
  if (source_specs.empty()) throw ParamError("labels: no sources");
  const std::size_t T = source_specs.front().num_frames;
  const std::size_t F = source_specs.front().num_bins;
  for (const auto& s : source_specs)
    if (s.num_frames != T || s.num_bins != F)
      throw ParamError("labels: source spectrogram shapes differ");
  const std::size_t N = T * F, C = source_specs.size();

  LabelMatrix lm;
  lm.num_frames = T;
  lm.num_bins = F;
  lm.onehot.setZero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C));
  lm.weights.resize(static_cast<Eigen::Index>(N));

  // mixture magnitude as the sum of source spectrograms (linear model)
  std::vector<double> mix_mag(N);
  double peak = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    std::complex<double> acc = 0.0;
    for (const auto& s : source_specs) acc += s.bins[i];
    mix_mag[i] = std::abs(acc);
    peak = std::max(peak, mix_mag[i]);
  }
  const double floor = peak * std::pow(10.0, -std::abs(floor_db) / 20.0);

  for (std::size_t i = 0; i < N; ++i) {
    if (mix_mag[i] < floor) {
      lm.weights(static_cast<Eigen::Index>(i)) = 0.0;
      continue;  // all-zero row
    }
    lm.weights(static_cast<Eigen::Index>(i)) = 1.0;
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double mag = std::abs(source_specs[c].bins[i]);
      if (mag > best_mag) {  // strict: ties stay at the lowest index
        best_mag = mag;
        best = c;
      }
    }
    lm.onehot(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(best)) = 1.0;
  }
  return lm;
}

BinaryMask ideal_binary_mask(const std::vector<Spectrogram>& source_specs,
                             std::size_t target_index, double floor_db) {
  if (target_index >= source_specs.size())
    throw ParamError("ideal mask: target index out of range");
  const LabelMatrix lm = ideal_labels(source_specs, floor_db);
  BinaryMask m;
  m.num_frames = lm.num_frames;
  m.num_bins = lm.num_bins;
  m.cells.assign(lm.num_frames * lm.num_bins, 0);
  for (std::size_t i = 0; i < m.cells.size(); ++i)
    m.cells[i] = lm.weights(static_cast<Eigen::Index>(i)) > 0.0 &&
                         lm.onehot(static_cast<Eigen::Index>(i),
                                   static_cast<Eigen::Index>(target_index)) > 0.0
                     ? 1
                     : 0;
  return m;
}

void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& m) {
  // rows = frequency, highest on top, like the spectrogram images
  std::vector<std::uint8_t> px(m.num_frames * m.num_bins, 0);
  for (std::size_t t = 0; t < m.num_frames; ++t)
    for (std::size_t f = 0; f < m.num_bins; ++f)
      px[(m.num_bins - 1 - f) * m.num_frames + t] = m.at(t, f) ? 255 : 0;
  write_pgm(path, m.num_bins, m.num_frames, px);
}

void write_mask_csv(const std::filesystem::path& path, const BinaryMask& m) {
  std::ostringstream out;
  for (std::size_t t = 0; t < m.num_frames; ++t) {
    for (std::size_t f = 0; f < m.num_bins; ++f) {
      if (f) out << ",";
      out << int(m.at(t, f));
    }
    out << "\n";
  }
  atomic_write(path, out.str());
}

}  // namespace uasep
