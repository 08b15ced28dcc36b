#ifndef UASEP_EMBEDNET_HPP
#define UASEP_EMBEDNET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uasep/masking.hpp"

namespace uasep {

enum class Architecture { rnn, lstm, bilstm };

const char* architecture_name(Architecture a);
Architecture architecture_from_name(const std::string& name);

// Parameters of one recurrent layer in one time direction. The lstm/bilstm
// cell uses all tensors (peepholes are per-unit weights on the cell state);
// the rnn cell uses only the candidate path W_xc, W_hc, b_c.
struct LayerParams {
  Eigen::MatrixXd W_xi, W_hi;
  Eigen::VectorXd w_ci, b_i;
  Eigen::MatrixXd W_xf, W_hf;
  Eigen::VectorXd w_cf, b_f;
  Eigen::MatrixXd W_xc, W_hc;
  Eigen::VectorXd b_c;
  Eigen::MatrixXd W_xo, W_ho;
  Eigen::VectorXd w_co, b_o;
};

struct NetworkParams {
  Architecture arch = Architecture::bilstm;
  int layers = 2;
  int hidden = 64;       // per direction
  int embed_dim = 10;    // K
  int freq_bins = 0;     // F
  bool sum_directions = false;  // bilstm combine: concat (default) or sum
  bool tanh_output = false;     // output activation: Relu (default) or tanh
  std::vector<LayerParams> fwd;  // one per layer, forward time direction
  std::vector<LayerParams> bwd;  // one per layer, reverse direction (bilstm only)
  Eigen::MatrixXd dense_w;  // (F*K) x dense_in
  Eigen::VectorXd dense_b;  // F*K

  int dense_in() const {
    return (arch == Architecture::bilstm && !sum_directions) ? 2 * hidden : hidden;
  }
};

// Gradients and optimizer velocity share the parameter layout.
using NetworkGrads = NetworkParams;

struct NetSpec {
  Architecture arch = Architecture::bilstm;
  int layers = 2;
  int hidden = 64;
  int embed_dim = 10;
  bool sum_directions = false;
  bool tanh_output = false;
};

struct TrainConfig {
  double learning_rate = 1e-5;
  double momentum = 0.9;
  double l2 = 1e-6;
  double dropout_input = 0.2;
  double dropout_hidden = 0.5;
  std::size_t epochs = 30;
  std::size_t chunk_frames = 100;
  double chunk_overlap = 0.5;
  std::uint64_t seed = 0;
};

// Per-bin K-dimensional embedding, row n = t*F + f, unit rows (zero rows where
// the pre-normalization magnitude fell under the 1e-12 guard).
struct EmbeddingMatrix {
  Eigen::MatrixXd rows;  // (T*F) x K
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
};

// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] initialization, seeded.
NetworkParams init_params(const NetSpec& spec, int freq_bins, std::uint64_t seed);
NetworkGrads zeros_like(const NetworkParams& params);

// Enumerates every tensor the architecture uses, in declared order. Drives the
// optimizer, checkpoint layout, checksum digest and gradient checks.
struct TensorRef {
  std::string name;
  Eigen::MatrixXd* mat = nullptr;  // exactly one of mat/vec is set
  Eigen::VectorXd* vec = nullptr;
};
std::vector<TensorRef> tensor_list(NetworkParams& params);

// One LSTM step with peephole gates. Keeps pre-activations for backprop.
struct LstmGateCache {
  Eigen::VectorXd x, h_prev, c_prev;
  Eigen::VectorXd zi, zf, zg, zo;  // gate pre-activations
  Eigen::VectorXd i, f, g, o;      // gate activations (g = tanh candidate)
  Eigen::VectorXd c, tanh_c, h;
};
void lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                       const Eigen::VectorXd& c_prev, const LayerParams& p,
                       LstmGateCache& cache);

struct DropoutSpec {
  double input_rate = 0.0;
  double hidden_rate = 0.0;
  bool training = false;
  std::uint64_t seed = 0;
};

// Maps T x F log-magnitude frames to per-bin unit embeddings. For bilstm the
// reverse-direction stack consumes the sequence back to front and the two
// final states combine (concat or sum) before the dense layer.
EmbeddingMatrix embed(const Eigen::MatrixXd& frames, const NetworkParams& params);

// Inverted dropout: training zeroes units with probability `rate` and scales
// survivors by 1/(1-rate); inference is the identity.
Eigen::MatrixXd dropout(const Eigen::MatrixXd& x, double rate, std::uint64_t seed,
                        bool training);

// Affinity loss |Theta Theta^T - Y Y^T|_F^2 in expanded Gram form; rows with
// weight w are scaled by sqrt(w) first, so weight-0 rows drop out entirely.
double dc_loss(const Eigen::MatrixXd& theta, const LabelMatrix& labels);

// Analytic gradient 4*(Theta(Theta^T Theta) - Y(Y^T Theta)) with the same
// weighting.
Eigen::MatrixXd dc_loss_grad(const Eigen::MatrixXd& theta, const LabelMatrix& labels);

// Full forward + affinity loss + backpropagation through time. Exact
// gradients for every tensor the architecture uses, through the row
// normalization, output activation (Relu subgradient 0 at 0), the dense
// layer, and both time directions. Deterministic; dropout only applies when
// `dropout.training` is set (fixed masks drawn from dropout.seed).
struct LossAndGrads {
  double loss = 0.0;
  EmbeddingMatrix embedding;
  NetworkGrads grads;
};
LossAndGrads loss_and_gradients(const Eigen::MatrixXd& frames, const LabelMatrix& labels,
                                const NetworkParams& params,
                                const DropoutSpec& dropout = {});

// v <- momentum*v - lr*(g + l2*w); w <- w + v, tensor by tensor.
void sgd_step(NetworkParams& params, NetworkGrads& grads, const TrainConfig& cfg,
              NetworkGrads& velocity);

// Checkpoint: magic "UANET1", u32 JSON header length, JSON header
// (architecture, dims, epoch, seed, config echo, tensor table), then the
// tensors as little-endian float64 in header order.
void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params,
                     std::size_t epoch, std::uint64_t seed,
                     const std::string& config_echo = "{}");
NetworkParams load_checkpoint(const std::filesystem::path& path,
                              std::size_t* epoch = nullptr);

// One line per tensor: name and FNV-1a 64 checksum of its bytes.
std::string checkpoint_digest(const NetworkParams& params);

}  // namespace uasep

#endif  // UASEP_EMBEDNET_HPP
