#include "uasep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"

namespace uasep {

namespace {

void check_shapes(const BinaryMask& m, const Spectrogram& s) {
  if (m.num_frames != s.num_frames || m.num_bins != s.num_bins)
    throw ParamError("metric: mask/spectrogram shape mismatch");
}

double masked_energy(const BinaryMask& m, const Spectrogram& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.bins.size(); ++i)
    if (m.cells[i]) acc += std::norm(s.bins[i]);
  return acc;
}

double total_energy(const Spectrogram& s) {
  double acc = 0.0;
  for (const auto& z : s.bins) acc += std::norm(z);
  return acc;
}

std::string fmt_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt_double(v);
}

}  // namespace

double psr(const BinaryMask& m, const Spectrogram& target) {
  check_shapes(m, target);
  const double total = total_energy(target);
  if (total <= 0.0) throw MetricError("psr: target spectrogram is silent");
  return masked_energy(m, target) / total;
}

double sir_mask(const BinaryMask& m, const Spectrogram& target,
                const Spectrogram& interferer) {
  check_shapes(m, target);
  check_shapes(m, interferer);
  const double num = masked_energy(m, target);
  const double den = masked_energy(m, interferer);
  if (num <= 0.0) throw MetricError("sir: mask keeps no target energy");
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

double input_sir_db(const Spectrogram& target, const Spectrogram& interferer) {
  const double num = total_energy(target);
  const double den = total_energy(interferer);
  if (num <= 0.0) throw MetricError("sir: target spectrogram is silent");
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

double sir_db(double sir_ratio) {
  if (std::isinf(sir_ratio) && sir_ratio > 0) return sir_ratio;
  if (sir_ratio <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sir_ratio);
}

double similarity(const TimeSignal& estimate, const TimeSignal& reference) {
  if (estimate.sample_rate != reference.sample_rate)
    throw ParamError("similarity: sample rates differ");
  const std::size_t n = std::min(estimate.size(), reference.size());
  if (n == 0) throw MetricError("similarity: empty signal");
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = estimate.samples[i], x = reference.samples[i];
    xy += y * x;
    yy += y * y;
    xx += x * x;
  }
  if (xx <= 0.0) throw MetricError("similarity: reference is silent");
  if (yy <= 0.0) return 0.0;  // silent estimate correlates with nothing
  return std::abs(xy) / std::sqrt(yy * xx);
}

SeparationReport align_and_report(const std::vector<TimeSignal>& estimates,
                                  const std::vector<TimeSignal>& references,
                                  const std::vector<BinaryMask>& masks,
                                  const std::vector<Spectrogram>& ref_specs) {
  const std::size_t me = estimates.size(), mr = references.size();
  if (mr == 0) throw ParamError("report: no references");
  if (me < mr) throw ParamError("report: fewer estimates than references");
  if (me > 8) throw ParamError("report: too many estimates for exhaustive alignment");
  const bool with_masks = !masks.empty();
  if (with_masks && (masks.size() != me || ref_specs.size() != mr))
    throw ParamError("report: masks/ref_specs must match estimate/reference counts");

  SeparationReport r;
  r.xi_matrix.resize(static_cast<Eigen::Index>(me), static_cast<Eigen::Index>(mr));
  for (std::size_t i = 0; i < me; ++i)
    for (std::size_t j = 0; j < mr; ++j)
      r.xi_matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          similarity(estimates[i], references[j]);

  // best injective reference -> estimate map by total similarity
  std::vector<std::size_t> order(me);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> best(order.begin(), order.begin() + static_cast<long>(mr));
  double best_total = -1.0;
  do {
    double total = 0.0;
    for (std::size_t j = 0; j < mr; ++j)
      total += r.xi_matrix(static_cast<Eigen::Index>(order[j]), static_cast<Eigen::Index>(j));
    if (total > best_total) {
      best_total = total;
      best.assign(order.begin(), order.begin() + static_cast<long>(mr));
    }
  } while (std::next_permutation(order.begin(), order.end()));
  r.assignment = best;

  r.xi.resize(mr);
  for (std::size_t j = 0; j < mr; ++j)
    r.xi[j] = r.xi_matrix(static_cast<Eigen::Index>(r.assignment[j]),
                          static_cast<Eigen::Index>(j));

  if (with_masks) {
    r.psr.resize(mr);
    r.sir_m.resize(mr);
    r.sir_in_db.resize(mr);
    r.sir_out_db.resize(mr);
    r.sir_gain_db.resize(mr);
    for (std::size_t j = 0; j < mr; ++j) {
      const BinaryMask& m = masks[r.assignment[j]];
      r.psr[j] = psr(m, ref_specs[j]);
      // interferer = every other reference summed, coherently
      Spectrogram v = ref_specs[j];
      std::fill(v.bins.begin(), v.bins.end(), std::complex<double>(0.0));
      for (std::size_t j2 = 0; j2 < mr; ++j2) {
        if (j2 == j) continue;
        for (std::size_t i = 0; i < v.bins.size(); ++i) v.bins[i] += ref_specs[j2].bins[i];
      }
      r.sir_m[j] = sir_mask(m, ref_specs[j], v);
      r.sir_in_db[j] = input_sir_db(ref_specs[j], v);
      r.sir_out_db[j] = sir_db(r.sir_m[j]);
      // a lone source is infinitely clean before and after
      r.sir_gain_db[j] = (std::isinf(r.sir_out_db[j]) && std::isinf(r.sir_in_db[j]))
                             ? 0.0
                             : r.sir_out_db[j] - r.sir_in_db[j];
    }
  }

  auto mean = [](const std::vector<double>& v, bool cap) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += cap ? std::min(x, kSirCap) : x;
    return acc / static_cast<double>(v.size());
  };
  r.mean_xi = mean(r.xi, false);
  r.mean_psr = mean(r.psr, false);
  r.mean_sir_m = mean(r.sir_m, true);
  return r;
}

void write_report_csv(const std::filesystem::path& path, const SeparationReport& r) {
  std::ostringstream out;
  out << "source,estimate,xi,psr,sir_m,sir_in_db,sir_out_db,sir_gain_db\n";
  for (std::size_t j = 0; j < r.xi.size(); ++j) {
    out << j << "," << r.assignment[j] << "," << fmt_metric(r.xi[j]);
    if (!r.psr.empty())
      out << "," << fmt_metric(r.psr[j]) << "," << fmt_metric(r.sir_m[j]) << ","
          << fmt_metric(r.sir_in_db[j]) << "," << fmt_metric(r.sir_out_db[j]) << ","
          << fmt_metric(r.sir_gain_db[j]);
    else
      out << ",,,,,";
    out << "\n";
  }
  out << "mean," << "," << fmt_metric(r.mean_xi) << "," << fmt_metric(r.mean_psr) << ","
      << fmt_metric(r.mean_sir_m) << ",,,\n";
  atomic_write(path, out.str());
}

void write_report_json(const std::filesystem::path& path, const SeparationReport& r) {
  nlohmann::json j;
  auto num = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  auto arr = [&](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(num(x));
    return a;
  };
  j["assignment"] = r.assignment;
  j["xi"] = arr(r.xi);
  j["psr"] = arr(r.psr);
  j["sir_m"] = arr(r.sir_m);
  j["sir_in_db"] = arr(r.sir_in_db);
  j["sir_out_db"] = arr(r.sir_out_db);
  j["sir_gain_db"] = arr(r.sir_gain_db);
  j["mean_xi"] = num(r.mean_xi);
  j["mean_psr"] = num(r.mean_psr);
  j["mean_sir_m"] = num(r.mean_sir_m);
  atomic_write(path, j.dump(2) + "\n");
}

}  // namespace uasep
