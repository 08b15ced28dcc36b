#ifndef UASEP_KMEANS_HPP
#define UASEP_KMEANS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace uasep {

struct KmeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;          // relative objective decrease
  bool plusplus_init = true;  // distance-weighted seeding; false = plain random rows
};

struct ClusterAssignment {
  std::vector<std::uint32_t> labels;       // length N
  Eigen::MatrixXd centers;                 // k x D
  double objective = 0.0;                  // weighted within-cluster squared distance
  std::size_t iterations = 0;
  std::vector<double> objective_history;   // objective after each update step
};

// Weighted Lloyd iterations. Positive-weight rows drive the centers; rows of
// weight 0 are assigned to their nearest center afterwards. Equidistant rows
// go to the lowest cluster index. An emptied cluster is reseeded at the
// positive-weight row farthest from its current center. Deterministic per
// seed.
ClusterAssignment kmeans(const Eigen::MatrixXd& rows, const Eigen::VectorXd& weights,
                         std::size_t k, std::uint64_t seed,
                         const KmeansOptions& opts = {});

// Lloyd iterations from caller-provided initial centers (no seeding step).
ClusterAssignment kmeans_from_centers(const Eigen::MatrixXd& rows,
                                      const Eigen::VectorXd& weights,
                                      const Eigen::MatrixXd& initial_centers,
                                      const KmeansOptions& opts = {});

void write_assignment_csv(const std::filesystem::path& path, const ClusterAssignment& a);

}  // namespace uasep

#endif  // UASEP_KMEANS_HPP
