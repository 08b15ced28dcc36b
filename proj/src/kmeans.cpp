#include "uasep/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"
#include "uasep/rng.hpp"

namespace uasep {

namespace {

std::size_t distinct_positive_rows(const Eigen::MatrixXd& rows,
                                   const Eigen::VectorXd& weights) {
  std::vector<std::size_t> idx;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    if (weights(i) > 0.0) idx.push_back(static_cast<std::size_t>(i));
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (rows(a, c) < rows(b, c)) return true;
      if (rows(a, c) > rows(b, c)) return false;
    }
    return false;
  });
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (i == 0 || rows.row(idx[i]) != rows.row(idx[i - 1])) ++distinct;
  return distinct;
}

// index drawn with probability proportional to weights[i]
std::size_t draw_weighted(Rng& rng, const std::vector<double>& weights, double total) {
  const double u = rng.uniform(0.0, total);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc && weights[i] > 0.0) return i;
  }
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  throw DegenerateError("kmeans: no positive draw weight");
}

Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights,
                             std::size_t k, Rng& rng, bool plusplus) {
  const auto N = rows.rows();
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), rows.cols());
  std::vector<double> draw(static_cast<std::size_t>(N));

  if (!plusplus) {
    for (Eigen::Index i = 0; i < N; ++i)
      draw[static_cast<std::size_t>(i)] = weights(i) > 0 ? 1.0 : 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double total = 0.0;
      for (double v : draw) total += v;
      const std::size_t pick = draw_weighted(rng, draw, total);
      centers.row(static_cast<Eigen::Index>(c)) = rows.row(static_cast<Eigen::Index>(pick));
      draw[pick] = 0.0;  // without replacement
    }
    return centers;
  }

  // first center weight-proportional, the rest D^2-times-weight proportional
  double total = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    draw[static_cast<std::size_t>(i)] = std::max(weights(i), 0.0);
    total += draw[static_cast<std::size_t>(i)];
  }
  if (total <= 0.0) throw DegenerateError("kmeans: all weights are zero");
  centers.row(0) = rows.row(static_cast<Eigen::Index>(draw_weighted(rng, draw, total)));

  Eigen::VectorXd d2 =
      (rows.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    total = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      draw[static_cast<std::size_t>(i)] = std::max(weights(i), 0.0) * d2(i);
      total += draw[static_cast<std::size_t>(i)];
    }
    std::size_t pick;
    if (total > 0.0) {
      pick = draw_weighted(rng, draw, total);
    } else {
      // every remaining mass sits on existing centers; any positive-weight row do
      for (Eigen::Index i = 0; i < N; ++i)
        draw[static_cast<std::size_t>(i)] = std::max(weights(i), 0.0);
      for (double v : draw) total += v;
      pick = draw_weighted(rng, draw, total);
    }
    centers.row(static_cast<Eigen::Index>(c)) = rows.row(static_cast<Eigen::Index>(pick));
    d2 = d2.cwiseMin(
        (rows.rowwise() - centers.row(static_cast<Eigen::Index>(c))).rowwise().squaredNorm());
  }
  return centers;
}

ClusterAssignment lloyd(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights,
                        Eigen::MatrixXd centers, const KmeansOptions& opts) {
  const auto N = rows.rows();
  const auto k = centers.rows();

  ClusterAssignment out;
  out.labels.assign(static_cast<std::size_t>(N), 0);
  out.centers = std::move(centers);

  double prev_objective = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    // assignment: nearest center, ties to the lowest index
    double objective = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      double best = std::numeric_limits<double>::infinity();
      Eigen::Index best_c = 0;
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (rows.row(i) - out.centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      out.labels[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best_c);
      objective += weights(i) * best;
    }

    // update; an emptied cluster restarts at the positive-weight row farthest
    // from its assigned center
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto c = static_cast<Eigen::Index>(out.labels[static_cast<std::size_t>(i)]);
      sums.row(c) += weights(i) * rows.row(i);
      mass(c) += weights(i);
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (mass(c) > 0.0) {
        out.centers.row(c) = sums.row(c) / mass(c);
        continue;
      }
      double worst = -1.0;
      Eigen::Index pick = -1;
      for (Eigen::Index i = 0; i < N; ++i) {
        if (weights(i) <= 0.0) continue;
        const auto ci = static_cast<Eigen::Index>(out.labels[static_cast<std::size_t>(i)]);
        const double d = (rows.row(i) - out.centers.row(ci)).squaredNorm();
        if (d > worst) {
          worst = d;
          pick = i;
        }
      }
      if (pick < 0) throw DegenerateError("kmeans: no rows to reseed an empty cluster");
      out.centers.row(c) = rows.row(pick);
      out.labels[static_cast<std::size_t>(pick)] = static_cast<std::uint32_t>(c);
    }

    out.objective = objective;
    out.objective_history.push_back(objective);
    out.iterations = iter + 1;
    // the first pass has no predecessor to compare against
    if (iter > 0 && prev_objective - objective <= opts.tol * prev_objective) break;
    prev_objective = objective;
  }

  // final labels against the final centers
  for (Eigen::Index i = 0; i < N; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_c = 0;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double d = (rows.row(i) - out.centers.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    out.labels[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best_c);
  }
  return out;
}

void validate(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights, std::size_t k) {
  if (rows.rows() == 0) throw ParamError("kmeans: no rows");
  if (weights.size() != rows.rows()) throw ParamError("kmeans: weight length mismatch");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights(i) < 0.0) throw ParamError("kmeans: negative weight");
  if (k == 0) throw ParamError("kmeans: k must be positive");
  const std::size_t distinct = distinct_positive_rows(rows, weights);
  if (k > distinct)
    throw DegenerateError("kmeans: k=" + std::to_string(k) + " exceeds the " +
                          std::to_string(distinct) + " distinct weighted rows");
}

}  // namespace

ClusterAssignment kmeans(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights,
                         std::size_t k, std::uint64_t seed, const KmeansOptions& opts) {
  validate(rows, weights, k);
  Rng rng(seed);
  return lloyd(rows, weights, seed_centers(rows, weights, k, rng, opts.plusplus_init),
               opts);
}

ClusterAssignment kmeans_from_centers(const Eigen::MatrixXd& rows,
                                      const Eigen::VectorXd& weights,
                                      const Eigen::MatrixXd& initial_centers,
                                      const KmeansOptions& opts) {
  validate(rows, weights, static_cast<std::size_t>(initial_centers.rows()));
  if (initial_centers.cols() != rows.cols())
    throw ParamError("kmeans: center dimension mismatch");
  return lloyd(rows, weights, initial_centers, opts);
}

void write_assignment_csv(const std::filesystem::path& path, const ClusterAssignment& a) {
  std::ostringstream out;
  out << "# k=" << a.centers.rows() << " iterations=" << a.iterations
      << " objective=" << fmt_double(a.objective) << "\n";
  for (auto l : a.labels) out << l << "\n";
  atomic_write(path, out.str());
}

}  // namespace uasep
