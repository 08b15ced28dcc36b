#include "uasep/embednet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"
#include "uasep/rng.hpp"

namespace uasep {

const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::rnn: return "rnn";
    case Architecture::lstm: return "lstm";
    case Architecture::bilstm: return "bilstm";
  }
  throw ParamError("unknown architecture");
}

Architecture architecture_from_name(const std::string& name) {
  if (name == "rnn") return Architecture::rnn;
  if (name == "lstm") return Architecture::lstm;
  if (name == "bilstm") return Architecture::bilstm;
  throw ParamError("unknown architecture name: " + name);
}

namespace {

constexpr double kRowNormGuard = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int num_directions(Architecture a) { return a == Architecture::bilstm ? 2 : 1; }

// input width of recurrent layer l
int layer_in(const NetworkParams& p, int l) {
  if (l == 0) return p.freq_bins;
  return num_directions(p.arch) == 2 ? 2 * p.hidden : p.hidden;
}

void list_layer(std::vector<TensorRef>& out, LayerParams& lp, Architecture arch,
                const std::string& prefix) {
  auto add_m = [&](const char* n, Eigen::MatrixXd& m) {
    out.push_back({prefix + n, &m, nullptr});
  };
  auto add_v = [&](const char* n, Eigen::VectorXd& v) {
    out.push_back({prefix + n, nullptr, &v});
  };
  if (arch == Architecture::rnn) {
    add_m("W_xc", lp.W_xc);
    add_m("W_hc", lp.W_hc);
    add_v("b_c", lp.b_c);
    return;
  }
  add_m("W_xi", lp.W_xi);
  add_m("W_hi", lp.W_hi);
  add_v("w_ci", lp.w_ci);
  add_v("b_i", lp.b_i);
  add_m("W_xf", lp.W_xf);
  add_m("W_hf", lp.W_hf);
  add_v("w_cf", lp.w_cf);
  add_v("b_f", lp.b_f);
  add_m("W_xc", lp.W_xc);
  add_m("W_hc", lp.W_hc);
  add_v("b_c", lp.b_c);
  add_m("W_xo", lp.W_xo);
  add_m("W_ho", lp.W_ho);
  add_v("w_co", lp.w_co);
  add_v("b_o", lp.b_o);
}

}  // namespace

std::vector<TensorRef> tensor_list(NetworkParams& params) {
  std::vector<TensorRef> out;
  for (int l = 0; l < params.layers; ++l)
    list_layer(out, params.fwd[l], params.arch, "fwd.l" + std::to_string(l) + ".");
  if (params.arch == Architecture::bilstm)
    for (int l = 0; l < params.layers; ++l)
      list_layer(out, params.bwd[l], params.arch, "bwd.l" + std::to_string(l) + ".");
  out.push_back({"dense.w", &params.dense_w, nullptr});
  out.push_back({"dense.b", nullptr, &params.dense_b});
  return out;
}

NetworkParams init_params(const NetSpec& spec, int freq_bins, std::uint64_t seed) {
  if (spec.layers < 1) throw ParamError("net: needs at least one layer");
  if (spec.hidden < 1 || spec.embed_dim < 1 || freq_bins < 1)
    throw ParamError("net: dimensions must be positive");

  NetworkParams p;
  p.arch = spec.arch;
  p.layers = spec.layers;
  p.hidden = spec.hidden;
  p.embed_dim = spec.embed_dim;
  p.freq_bins = freq_bins;
  p.sum_directions = spec.sum_directions;
  p.tanh_output = spec.tanh_output;

  const int H = p.hidden;
  auto make_layer = [&](int l) {
    LayerParams lp;
    const int in = layer_in(p, l);
    auto m = [&](Eigen::MatrixXd& w, int r, int c) { w.setZero(r, c); };
    auto v = [&](Eigen::VectorXd& w) { w.setZero(H); };
    if (p.arch != Architecture::rnn) {
      m(lp.W_xi, H, in), m(lp.W_hi, H, H), v(lp.w_ci), v(lp.b_i);
      m(lp.W_xf, H, in), m(lp.W_hf, H, H), v(lp.w_cf), v(lp.b_f);
      m(lp.W_xo, H, in), m(lp.W_ho, H, H), v(lp.w_co), v(lp.b_o);
    }
    m(lp.W_xc, H, in), m(lp.W_hc, H, H), v(lp.b_c);
    return lp;
  };
  for (int l = 0; l < p.layers; ++l) p.fwd.push_back(make_layer(l));
  if (p.arch == Architecture::bilstm)
    for (int l = 0; l < p.layers; ++l) p.bwd.push_back(make_layer(l));
  p.dense_w.setZero(p.freq_bins * p.embed_dim, p.dense_in());
  p.dense_b.setZero(p.freq_bins * p.embed_dim);

  // uniform +-1/sqrt(fan_in) on multiplicative weights, zero biases
  Rng rng(seed);
  for (auto& t : tensor_list(p)) {
    if (t.name.ends_with(".b_i") || t.name.ends_with(".b_f") || t.name.ends_with(".b_c") ||
        t.name.ends_with(".b_o") || t.name == "dense.b")
      continue;
    if (t.mat) {
      const double b = 1.0 / std::sqrt(static_cast<double>(t.mat->cols()));
      for (Eigen::Index i = 0; i < t.mat->rows(); ++i)
        for (Eigen::Index j = 0; j < t.mat->cols(); ++j)
          (*t.mat)(i, j) = rng.uniform(-b, b);
    } else {
      const double b = 1.0 / std::sqrt(static_cast<double>(H));
      for (Eigen::Index i = 0; i < t.vec->size(); ++i) (*t.vec)(i) = rng.uniform(-b, b);
    }
  }
  return p;
}

NetworkGrads zeros_like(const NetworkParams& params) {
  NetworkGrads g = params;
  for (auto& t : tensor_list(g)) {
    if (t.mat) t.mat->setZero();
    else t.vec->setZero();
  }
  return g;
}

void lstm_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                       const Eigen::VectorXd& c_prev, const LayerParams& p,
                       LstmGateCache& cache) {
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.zi = p.W_xi * x + p.W_hi * h_prev + p.w_ci.cwiseProduct(c_prev) + p.b_i;
  cache.zf = p.W_xf * x + p.W_hf * h_prev + p.w_cf.cwiseProduct(c_prev) + p.b_f;
  cache.zg = p.W_xc * x + p.W_hc * h_prev + p.b_c;
  cache.i = cache.zi.unaryExpr([](double z) { return sigmoid(z); });
  cache.f = cache.zf.unaryExpr([](double z) { return sigmoid(z); });
  cache.g = cache.zg.array().tanh();
  cache.c = cache.f.cwiseProduct(c_prev) + cache.i.cwiseProduct(cache.g);
  // output gate peeps at the freshly updated cell state
  cache.zo = p.W_xo * x + p.W_ho * h_prev + p.w_co.cwiseProduct(cache.c) + p.b_o;
  cache.o = cache.zo.unaryExpr([](double z) { return sigmoid(z); });
  cache.tanh_c = cache.c.array().tanh();
  cache.h = cache.o.cwiseProduct(cache.tanh_c);
}

namespace {

// plain tanh recurrence, reusing the cache's candidate fields
void rnn_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                      const LayerParams& p, LstmGateCache& cache) {
  cache.x = x;
  cache.h_prev = h_prev;
  cache.zg = p.W_xc * x + p.W_hc * h_prev + p.b_c;
  cache.h = cache.zg.array().tanh();
}

struct ForwardState {
  // h[l][dir] is T x hidden in time order; caches in processing order
  std::vector<std::array<Eigen::MatrixXd, 2>> h;
  std::vector<std::array<std::vector<LstmGateCache>, 2>> caches;
  std::vector<Eigen::MatrixXd> drop_mask;  // per layer, T x in_dim; empty = no dropout
  Eigen::MatrixXd v;  // T x dense_in
  Eigen::MatrixXd z;  // T x F*K
  Eigen::MatrixXd a;  // activations
  EmbeddingMatrix emb;
};

Eigen::MatrixXd draw_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  const double keep = 1.0 - rate;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rng.uniform(0.0, 1.0) < rate ? 0.0 : 1.0 / keep;
  return m;
}

void forward_full(const Eigen::MatrixXd& frames, const NetworkParams& p,
                  const DropoutSpec& drop, ForwardState& st) {
  const auto T = frames.rows();
  if (frames.cols() != p.freq_bins)
    throw ParamError("embed: frame width != network freq_bins");
  if (T == 0) throw ParamError("embed: no frames");
  const int dirs = num_directions(p.arch);
  const int H = p.hidden, K = p.embed_dim, F = p.freq_bins;
  const bool lstm = p.arch != Architecture::rnn;

  const bool dropping =
      drop.training && (drop.input_rate > 0.0 || drop.hidden_rate > 0.0);
  Rng mask_rng(drop.seed);

  st.h.assign(p.layers, {});
  st.caches.assign(p.layers, {});
  st.drop_mask.assign(p.layers, Eigen::MatrixXd());

  Eigen::MatrixXd input = frames;  // layer input in time order
  for (int l = 0; l < p.layers; ++l) {
    const double rate = l == 0 ? drop.input_rate : drop.hidden_rate;
    if (dropping && rate > 0.0) {
      st.drop_mask[l] = draw_mask(input.rows(), input.cols(), rate, mask_rng);
      input = input.cwiseProduct(st.drop_mask[l]);
    }
    for (int d = 0; d < dirs; ++d) {
      const LayerParams& lp = d == 0 ? p.fwd[l] : p.bwd[l];
      auto& cache = st.caches[l][d];
      cache.resize(T);
      st.h[l][d].setZero(T, H);
      Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(H);
      Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(H);
      for (Eigen::Index s = 0; s < T; ++s) {
        const Eigen::Index t = d == 0 ? s : T - 1 - s;  // processing order
        const Eigen::VectorXd x = input.row(t).transpose();
        if (lstm) {
          lstm_cell_forward(x, h_prev, c_prev, lp, cache[s]);
          c_prev = cache[s].c;
        } else {
          rnn_cell_forward(x, h_prev, lp, cache[s]);
        }
        h_prev = cache[s].h;
        st.h[l][d].row(t) = cache[s].h.transpose();
      }
    }
    if (l + 1 < p.layers) {
      if (dirs == 2) {
        input.resize(T, 2 * H);
        input << st.h[l][0], st.h[l][1];
      } else {
        input = st.h[l][0];
      }
    }
  }

  const int last = p.layers - 1;
  if (dirs == 2 && !p.sum_directions) {
    st.v.resize(T, 2 * H);
    st.v << st.h[last][0], st.h[last][1];
  } else if (dirs == 2) {
    st.v = st.h[last][0] + st.h[last][1];
  } else {
    st.v = st.h[last][0];
  }

  st.z = (st.v * p.dense_w.transpose()).rowwise() + p.dense_b.transpose();
  if (p.tanh_output)
    st.a = st.z.array().tanh().matrix();
  else
    st.a = st.z.cwiseMax(0.0);

  st.emb.num_frames = static_cast<std::size_t>(T);
  st.emb.num_bins = static_cast<std::size_t>(F);
  st.emb.rows.resize(T * F, K);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int f = 0; f < F; ++f) {
      const Eigen::RowVectorXd raw = st.a.row(t).segment(f * K, K);
      const double n = raw.norm();
      if (n < kRowNormGuard)
        st.emb.rows.row(t * F + f).setZero();
      else
        st.emb.rows.row(t * F + f) = raw / n;
    }
}

}  // namespace

EmbeddingMatrix embed(const Eigen::MatrixXd& frames, const NetworkParams& params) {
  ForwardState st;
  forward_full(frames, params, {}, st);
  return std::move(st.emb);
}

Eigen::MatrixXd dropout(const Eigen::MatrixXd& x, double rate, std::uint64_t seed,
                        bool training) {
  if (rate < 0.0 || rate >= 1.0) throw ParamError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  Rng rng(seed);
  return x.cwiseProduct(draw_mask(x.rows(), x.cols(), rate, rng));
}

namespace {

void check_loss_args(const Eigen::MatrixXd& theta, const LabelMatrix& labels) {
  if (theta.rows() != labels.onehot.rows())
    throw ParamError("loss: embedding/label row counts differ");
  if (labels.weights.size() != theta.rows())
    throw ParamError("loss: weight length mismatch");
}

// sum in ascending value order: makes the total independent of the caller's
// column ordering bit-for-bit
double sorted_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc;
}

}  // namespace

double dc_loss(const Eigen::MatrixXd& theta, const LabelMatrix& labels) {
  check_loss_args(theta, labels);
  const Eigen::VectorXd s = labels.weights.cwiseSqrt();
  const Eigen::MatrixXd tw = s.asDiagonal() * theta;
  const Eigen::MatrixXd yw = s.asDiagonal() * labels.onehot;
  const Eigen::Index K = theta.cols(), C = labels.onehot.cols();

  // Gram matrices as sequential rank-1 updates: each entry accumulates in row
  // order, so all-zero rows contribute exact zeros and the value is identical
  // whether such rows are present or removed
  Eigen::MatrixXd tt = Eigen::MatrixXd::Zero(K, K);
  Eigen::MatrixXd ty = Eigen::MatrixXd::Zero(K, C);
  Eigen::MatrixXd yy = Eigen::MatrixXd::Zero(C, C);
  for (Eigen::Index n = 0; n < tw.rows(); ++n) {
    const auto tr = tw.row(n);
    const auto yr = yw.row(n);
    tt.noalias() += tr.transpose() * tr;
    ty.noalias() += tr.transpose() * yr;
    yy.noalias() += yr.transpose() * yr;
  }

  const double term1 = tt.squaredNorm();

  // per-label-column contributions, summed order-independently
  std::vector<double> cross(static_cast<std::size_t>(C));
  for (Eigen::Index c = 0; c < C; ++c)
    cross[static_cast<std::size_t>(c)] = ty.col(c).squaredNorm();
  const double term2 = sorted_sum(cross);

  std::vector<double> self(static_cast<std::size_t>(C));
  for (Eigen::Index c = 0; c < C; ++c)
    self[static_cast<std::size_t>(c)] = yy.col(c).squaredNorm();
  const double term3 = sorted_sum(self);

  return term1 - 2.0 * term2 + term3;
}

Eigen::MatrixXd dc_loss_grad(const Eigen::MatrixXd& theta, const LabelMatrix& labels) {
  check_loss_args(theta, labels);
  const Eigen::VectorXd s = labels.weights.cwiseSqrt();
  const Eigen::MatrixXd tw = s.asDiagonal() * theta;
  const Eigen::Index N = theta.rows(), K = theta.cols(), C = labels.onehot.cols();

  Eigen::MatrixXd tt = Eigen::MatrixXd::Zero(K, K);
  for (Eigen::Index n = 0; n < N; ++n)
    tt.noalias() += tw.row(n).transpose() * tw.row(n);

  // class rows of Yw'Tw, accumulated in row order; one-hot labels turn Yw*(.)
  // into a row lookup, so relabeling the classes permutes storage only and
  // never an accumulation order
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(C, K);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index c = 0; c < C; ++c)
      if (labels.onehot(n, c) != 0.0)
        m.row(c).noalias() += (labels.onehot(n, c) * s(n)) * tw.row(n);

  Eigen::MatrixXd g = 4.0 * (tw * tt);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index c = 0; c < C; ++c)
      if (labels.onehot(n, c) != 0.0)
        g.row(n).noalias() -= (4.0 * labels.onehot(n, c) * s(n)) * m.row(c);
  return s.asDiagonal() * g;
}

LossAndGrads loss_and_gradients(const Eigen::MatrixXd& frames, const LabelMatrix& labels,
                                const NetworkParams& params, const DropoutSpec& drop) {
  ForwardState st;
  forward_full(frames, params, drop, st);

  const auto T = frames.rows();
  const int H = params.hidden, K = params.embed_dim, F = params.freq_bins;
  const int dirs = num_directions(params.arch);
  const bool lstm = params.arch != Architecture::rnn;
  const int last = params.layers - 1;

  LossAndGrads out;
  out.loss = dc_loss(st.emb.rows, labels);
  out.grads = zeros_like(params);

  const Eigen::MatrixXd g_rows = dc_loss_grad(st.emb.rows, labels);

  // through the row normalization and the output activation
  Eigen::MatrixXd dz(T, F * K);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int f = 0; f < F; ++f) {
      const Eigen::RowVectorXd raw = st.a.row(t).segment(f * K, K);
      const double n = raw.norm();
      Eigen::RowVectorXd da;
      if (n < kRowNormGuard) {
        da = Eigen::RowVectorXd::Zero(K);  // output pinned to zero here
      } else {
        const Eigen::RowVectorXd u = raw / n;
        const Eigen::RowVectorXd g = g_rows.row(t * F + f);
        da = (g - u * g.dot(u)) / n;
      }
      for (int k = 0; k < K; ++k) {
        const Eigen::Index col = f * K + k;
        const double slope = params.tanh_output
                                 ? 1.0 - st.a(t, col) * st.a(t, col)
                                 : (st.z(t, col) > 0.0 ? 1.0 : 0.0);
        dz(t, col) = da(k) * slope;
      }
    }

  out.grads.dense_w.noalias() = dz.transpose() * st.v;
  out.grads.dense_b = dz.colwise().sum().transpose();
  const Eigen::MatrixXd dv = dz * params.dense_w;  // T x dense_in

  // seeds into the top recurrent layer's h states, per direction
  std::vector<std::array<Eigen::MatrixXd, 2>> dh_seed(params.layers);
  for (int l = 0; l < params.layers; ++l)
    for (int d = 0; d < dirs; ++d) dh_seed[l][d].setZero(T, H);
  for (int d = 0; d < dirs; ++d) {
    if (dirs == 2 && !params.sum_directions)
      dh_seed[last][d] = dv.middleCols(d * H, H);
    else
      dh_seed[last][d] = dv;
  }

  for (int l = last; l >= 0; --l) {
    const int in_dim = layer_in(params, l);
    Eigen::MatrixXd dinput = Eigen::MatrixXd::Zero(T, in_dim);
    for (int d = 0; d < dirs; ++d) {
      const LayerParams& lp = d == 0 ? params.fwd[l] : params.bwd[l];
      LayerParams& gp = d == 0 ? out.grads.fwd[l] : out.grads.bwd[l];
      const auto& cache = st.caches[l][d];
      Eigen::VectorXd dh_rec = Eigen::VectorXd::Zero(H);
      Eigen::VectorXd dc_rec = Eigen::VectorXd::Zero(H);
      for (Eigen::Index s = T - 1; s >= 0; --s) {
        const Eigen::Index t = d == 0 ? s : T - 1 - s;
        const LstmGateCache& cc = cache[s];
        const Eigen::VectorXd dh =
            dh_seed[l][d].row(t).transpose() + dh_rec;
        Eigen::VectorXd dx;
        if (lstm) {
          const Eigen::VectorXd d_o = dh.cwiseProduct(cc.tanh_c);
          const Eigen::VectorXd dzo =
              d_o.cwiseProduct(cc.o.cwiseProduct(Eigen::VectorXd::Ones(H) - cc.o));
          Eigen::VectorXd dc =
              dc_rec + dh.cwiseProduct(cc.o).cwiseProduct(
                           (Eigen::VectorXd::Ones(H) -
                            cc.tanh_c.cwiseProduct(cc.tanh_c))) +
              lp.w_co.cwiseProduct(dzo);
          const Eigen::VectorXd d_i = dc.cwiseProduct(cc.g);
          const Eigen::VectorXd dzi =
              d_i.cwiseProduct(cc.i.cwiseProduct(Eigen::VectorXd::Ones(H) - cc.i));
          const Eigen::VectorXd d_f = dc.cwiseProduct(cc.c_prev);
          const Eigen::VectorXd dzf =
              d_f.cwiseProduct(cc.f.cwiseProduct(Eigen::VectorXd::Ones(H) - cc.f));
          const Eigen::VectorXd d_g = dc.cwiseProduct(cc.i);
          const Eigen::VectorXd dzg =
              d_g.cwiseProduct(Eigen::VectorXd::Ones(H) - cc.g.cwiseProduct(cc.g));

          gp.W_xi.noalias() += dzi * cc.x.transpose();
          gp.W_hi.noalias() += dzi * cc.h_prev.transpose();
          gp.w_ci += dzi.cwiseProduct(cc.c_prev);
          gp.b_i += dzi;
          gp.W_xf.noalias() += dzf * cc.x.transpose();
          gp.W_hf.noalias() += dzf * cc.h_prev.transpose();
          gp.w_cf += dzf.cwiseProduct(cc.c_prev);
          gp.b_f += dzf;
          gp.W_xc.noalias() += dzg * cc.x.transpose();
          gp.W_hc.noalias() += dzg * cc.h_prev.transpose();
          gp.b_c += dzg;
          gp.W_xo.noalias() += dzo * cc.x.transpose();
          gp.W_ho.noalias() += dzo * cc.h_prev.transpose();
          gp.w_co += dzo.cwiseProduct(cc.c);
          gp.b_o += dzo;

          dc_rec = dc.cwiseProduct(cc.f) + lp.w_ci.cwiseProduct(dzi) +
                   lp.w_cf.cwiseProduct(dzf);
          dh_rec = lp.W_hi.transpose() * dzi + lp.W_hf.transpose() * dzf +
                   lp.W_hc.transpose() * dzg + lp.W_ho.transpose() * dzo;
          dx = lp.W_xi.transpose() * dzi + lp.W_xf.transpose() * dzf +
               lp.W_xc.transpose() * dzg + lp.W_xo.transpose() * dzo;
        } else {
          const Eigen::VectorXd dzg =
              dh.cwiseProduct(Eigen::VectorXd::Ones(H) - cc.h.cwiseProduct(cc.h));
          gp.W_xc.noalias() += dzg * cc.x.transpose();
          gp.W_hc.noalias() += dzg * cc.h_prev.transpose();
          gp.b_c += dzg;
          dh_rec = lp.W_hc.transpose() * dzg;
          dx = lp.W_xc.transpose() * dzg;
        }
        dinput.row(t) += dx.transpose();
      }
    }
    if (l > 0) {
      if (st.drop_mask[l].size() > 0) dinput = dinput.cwiseProduct(st.drop_mask[l]);
      for (int d = 0; d < dirs; ++d)
        dh_seed[l - 1][d] += dinput.middleCols(d * H, H);
    }
  }

  out.embedding = std::move(st.emb);
  return out;
}

void sgd_step(NetworkParams& params, NetworkGrads& grads, const TrainConfig& cfg,
              NetworkGrads& velocity) {
  auto tp = tensor_list(params);
  auto tg = tensor_list(grads);
  auto tv = tensor_list(velocity);
  if (tp.size() != tg.size() || tp.size() != tv.size())
    throw ParamError("sgd: parameter/gradient/velocity layouts differ");
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (tp[i].mat) {
      auto& w = *tp[i].mat;
      auto& g = *tg[i].mat;
      auto& v = *tv[i].mat;
      if (w.rows() != g.rows() || w.cols() != g.cols())
        throw ParamError("sgd: gradient shape mismatch at " + tp[i].name);
      v = cfg.momentum * v - cfg.learning_rate * (g + cfg.l2 * w);
      w += v;
    } else {
      auto& w = *tp[i].vec;
      auto& g = *tg[i].vec;
      auto& v = *tv[i].vec;
      if (w.size() != g.size()) throw ParamError("sgd: gradient shape mismatch at " + tp[i].name);
      v = cfg.momentum * v - cfg.learning_rate * (g + cfg.l2 * w);
      w += v;
    }
  }
}

namespace {

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

constexpr char kNetMagic[6] = {'U', 'A', 'N', 'E', 'T', '1'};

}  // namespace

std::string checkpoint_digest(const NetworkParams& params) {
  auto p = const_cast<NetworkParams&>(params);
  std::ostringstream out;
  for (auto& t : tensor_list(p)) {
    const double* data = t.mat ? t.mat->data() : t.vec->data();
    const std::size_t n = t.mat ? static_cast<std::size_t>(t.mat->size())
                                : static_cast<std::size_t>(t.vec->size());
    out << t.name << " " << hex64(fnv1a64(data, n * sizeof(double))) << "\n";
  }
  return out.str();
}

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params,
                     std::size_t epoch, std::uint64_t seed,
                     const std::string& config_echo) {
  auto p = const_cast<NetworkParams&>(params);
  auto tensors = tensor_list(p);

  nlohmann::json header;
  header["format"] = "UANET1";
  header["arch"] = architecture_name(params.arch);
  header["layers"] = params.layers;
  header["hidden"] = params.hidden;
  header["embed_dim"] = params.embed_dim;
  header["freq_bins"] = params.freq_bins;
  header["sum_directions"] = params.sum_directions;
  header["tanh_output"] = params.tanh_output;
  header["epoch"] = epoch;
  header["seed"] = seed;
  header["config"] = config_echo;
  auto& table = header["tensors"] = nlohmann::json::array();
  for (auto& t : tensors) {
    const double* data = t.mat ? t.mat->data() : t.vec->data();
    const std::size_t n = t.mat ? static_cast<std::size_t>(t.mat->size())
                                : static_cast<std::size_t>(t.vec->size());
    table.push_back({{"name", t.name},
                     {"rows", t.mat ? t.mat->rows() : t.vec->size()},
                     {"cols", t.mat ? t.mat->cols() : 1},
                     {"fnv64", hex64(fnv1a64(data, n * sizeof(double)))}});
  }

  const std::string hj = header.dump();
  std::string out(kNetMagic, sizeof(kNetMagic));
  const auto hl = static_cast<std::uint32_t>(hj.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((hl >> (8 * i)) & 0xff));
  out += hj;
  // tensors as little-endian float64, column-major within each tensor
  for (auto& t : tensors) {
    const double* data = t.mat ? t.mat->data() : t.vec->data();
    const std::size_t n = t.mat ? static_cast<std::size_t>(t.mat->size())
                                : static_cast<std::size_t>(t.vec->size());
    out.append(reinterpret_cast<const char*>(data), n * sizeof(double));
  }
  atomic_write(path, out);
}

NetworkParams load_checkpoint(const std::filesystem::path& path, std::size_t* epoch) {
  const std::string raw = read_file(path);
  if (raw.size() < sizeof(kNetMagic) + 4 ||
      std::memcmp(raw.data(), kNetMagic, sizeof(kNetMagic)) != 0)
    throw FormatError("not a network checkpoint: " + path.string());
  const auto* p = reinterpret_cast<const std::uint8_t*>(raw.data()) + sizeof(kNetMagic);
  const std::uint32_t hl = p[0] | (p[1] << 8) | (p[2] << 16) |
                           (static_cast<std::uint32_t>(p[3]) << 24);
  const std::size_t body = sizeof(kNetMagic) + 4;
  if (raw.size() < body + hl) throw FormatError("truncated checkpoint header: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.substr(body, hl));
  } catch (const std::exception& e) {
    throw FormatError("bad checkpoint header: " + std::string(e.what()));
  }
  if (header.value("format", "") != "UANET1")
    throw FormatError("unknown checkpoint format in " + path.string());

  NetSpec spec;
  spec.arch = architecture_from_name(header.at("arch").get<std::string>());
  spec.layers = header.at("layers").get<int>();
  spec.hidden = header.at("hidden").get<int>();
  spec.embed_dim = header.at("embed_dim").get<int>();
  spec.sum_directions = header.value("sum_directions", false);
  spec.tanh_output = header.value("tanh_output", false);
  NetworkParams params = init_params(spec, header.at("freq_bins").get<int>(), 0);
  if (epoch) *epoch = header.value("epoch", std::size_t{0});

  auto tensors = tensor_list(params);
  const auto& table = header.at("tensors");
  if (table.size() != tensors.size())
    throw FormatError("checkpoint tensor table size mismatch in " + path.string());

  std::size_t off = body + hl;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& t = tensors[i];
    const auto& row = table[i];
    if (row.at("name").get<std::string>() != t.name)
      throw FormatError("checkpoint tensor order mismatch at " + t.name);
    const auto rows = row.at("rows").get<Eigen::Index>();
    const auto cols = row.at("cols").get<Eigen::Index>();
    double* data;
    std::size_t n;
    if (t.mat) {
      if (rows != t.mat->rows() || cols != t.mat->cols())
        throw FormatError("checkpoint tensor shape mismatch at " + t.name);
      data = t.mat->data();
      n = static_cast<std::size_t>(t.mat->size());
    } else {
      if (rows != t.vec->size() || cols != 1)
        throw FormatError("checkpoint tensor shape mismatch at " + t.name);
      data = t.vec->data();
      n = static_cast<std::size_t>(t.vec->size());
    }
    if (off + n * sizeof(double) > raw.size())
      throw FormatError("truncated checkpoint payload at " + t.name);
    std::memcpy(data, raw.data() + off, n * sizeof(double));
    off += n * sizeof(double);
    const std::string want = row.at("fnv64").get<std::string>();
    if (hex64(fnv1a64(data, n * sizeof(double))) != want)
      throw FormatError("checkpoint checksum mismatch at " + t.name);
  }
  if (off != raw.size())
    throw FormatError("trailing bytes in checkpoint " + path.string());
  return params;
}

}  // namespace uasep
