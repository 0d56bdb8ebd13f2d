// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/neuralcore/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "smi/common/error.hpp"
#include "smi/kernels/kernels.hpp"

namespace smi::nn {

using kern::Trans;

std::size_t ArchConfig::param_count() const {
  const std::size_t g = 4 * hidden;
  return (input * encoder + encoder) + (encoder * g + hidden * g + g) +
         (hidden * cls_hidden + cls_hidden) + (cls_hidden * classes + classes) +
         (hidden * pred_hidden + pred_hidden) + (pred_hidden * pred_out() + pred_out());
}

nlohmann::json ArchConfig::to_json() const {
  return {{"input", input},           {"encoder", encoder}, {"hidden", hidden},
          {"cls_hidden", cls_hidden}, {"classes", classes}, {"pred_hidden", pred_hidden}};
}

ArchConfig ArchConfig::from_json(const nlohmann::json& j) {
  ArchConfig a;
  try {
    a.input = j.value("input", a.input);
    a.encoder = j.value("encoder", a.encoder);
    a.hidden = j.value("hidden", a.hidden);
    a.cls_hidden = j.value("cls_hidden", a.cls_hidden);
    a.classes = j.value("classes", a.classes);
    a.pred_hidden = j.value("pred_hidden", a.pred_hidden);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config_invalid, std::string("architecture: ") + e.what());
  }
  if (a.input == 0 || a.encoder == 0 || a.hidden == 0 || a.cls_hidden == 0 || a.classes < 2 ||
      a.pred_hidden == 0)
    throw Error(ErrorKind::config_invalid, "architecture sizes must be positive");
  return a;
}

std::array<TensorSpec, kTensorCount> tensor_layout(const ArchConfig& a) {
  const std::size_t g = 4 * a.hidden;
  std::array<TensorSpec, kTensorCount> l = {{
      {"encoder.weight", a.input, a.encoder, 0},
      {"encoder.bias", 1, a.encoder, 0},
      {"lstm.weight_input", a.encoder, g, 0},
      {"lstm.weight_recurrent", a.hidden, g, 0},
      {"lstm.bias", 1, g, 0},
      {"classifier.weight1", a.hidden, a.cls_hidden, 0},
      {"classifier.bias1", 1, a.cls_hidden, 0},
      {"classifier.weight2", a.cls_hidden, a.classes, 0},
      {"classifier.bias2", 1, a.classes, 0},
      {"predictor.weight1", a.hidden, a.pred_hidden, 0},
      {"predictor.bias1", 1, a.pred_hidden, 0},
      {"predictor.weight2", a.pred_hidden, a.pred_out(), 0},
      {"predictor.bias2", 1, a.pred_out(), 0},
  }};
  std::size_t off = 0;
  for (auto& t : l) {
    t.offset = off;
    off += t.size();
  }
  return l;
}

template <class T>
ModelParams<T> ModelParams<T>::zeros(const ArchConfig& arch) {
  ModelParams<T> p;
  p.arch = arch;
  p.layout = tensor_layout(arch);
  p.data.assign(arch.param_count(), T(0));
  return p;
}

template <class T>
bool ModelParams<T>::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](T x) { return std::isfinite(x); });
}

template <class T>
ModelParams<T> init_params(const ArchConfig& arch, std::uint64_t seed, ParamBudget budget) {
  const std::size_t n = arch.param_count();
  if (n < budget.min || n > budget.max)
    throw Error(ErrorKind::budget_violation,
                std::to_string(n) + " parameters outside [" + std::to_string(budget.min) + ", " +
                    std::to_string(budget.max) + "]");
  ModelParams<T> p = ModelParams<T>::zeros(arch);
  std::mt19937_64 rng(seed);
  // Uniform [0,1) from the top 53 bits: identical on every standard library.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (Tensor t : {Tensor::enc_w, Tensor::lstm_wx, Tensor::lstm_wh, Tensor::cls_w1,
                   Tensor::cls_w2, Tensor::pred_w1, Tensor::pred_w2}) {
    const auto& spec = p.layout[static_cast<std::size_t>(t)];
    const double limit = std::sqrt(3.0 / static_cast<double>(spec.rows));
    for (T& w : p.tensor(t)) w = static_cast<T>((2.0 * uniform() - 1.0) * limit);
  }
  auto bias = p.tensor(Tensor::lstm_b);
  std::fill(bias.begin() + arch.hidden, bias.begin() + 2 * arch.hidden, T(1));
  return p;
}

template <class T>
int argmax(std::span<const T> row) {
  int best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

namespace {

// Y = X W + b over `rows` rows.
template <class T>
void dense(std::size_t rows, std::size_t in, std::size_t out, const T* x, std::span<const T> w,
           std::span<const T> b, T* y) {
  for (std::size_t r = 0; r < rows; ++r) std::copy(b.begin(), b.end(), y + r * out);
  kern::gemm(Trans::no, Trans::no, rows, out, in, x, in, w.data(), out, y, out, true);
}

template <class T>
void colsum_add(std::size_t rows, std::size_t cols, const T* a, std::span<T> out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = a + r * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
  }
}

// d *= 1 - y^2 (tanh derivative from its output).
template <class T>
void tanh_backward(std::size_t n, const T* y, T* d) {
  for (std::size_t i = 0; i < n; ++i) d[i] *= T(1) - y[i] * y[i];
}

template <class T>
bool finite_range(const T* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

}  // namespace

template <class T>
void WindowEngine<T>::reserve(std::size_t rows, std::size_t batch, bool with_pred) {
  const auto& a = arch_;
  const std::size_t g = 4 * a.hidden;
  auto fit = [](std::vector<T>& v, std::size_t n) {
    if (v.size() < n) v.resize(n);
  };
  fit(e_, rows * a.encoder);
  fit(g_, rows * g);
  fit(cext_, (rows + batch) * a.hidden);
  fit(hext_, (rows + batch) * a.hidden);
  fit(tc_, rows * a.hidden);
  fit(u_, rows * a.cls_hidden);
  fit(p_, rows * a.classes);
  if (with_pred) {
    fit(v_, rows * a.pred_hidden);
    fit(o_, rows * a.pred_out());
    fit(s_, rows * a.input);
  }
}

template <class T>
WindowStats WindowEngine<T>::run(Pass pass, const ModelParams<T>& prm, const WindowInput<T>& in,
                                 double gamma, BatchState<T>& state, ParamGradients<T>* grads,
                                 std::span<int> argmax_out) {
  const ArchConfig& a = arch_;
  const std::size_t B = in.batch, W = in.steps, R = B * W;
  const std::size_t D = a.input, Ne = a.encoder, H = a.hidden, G = 4 * H;
  const std::size_t Nc = a.cls_hidden, K = a.classes, Np = a.pred_hidden, P2 = a.pred_out();
  if (!(prm.arch == a)) throw Error(ErrorKind::dimension_mismatch, "parameter architecture differs");
  if (state.batch != B || state.hidden != H)
    throw Error(ErrorKind::dimension_mismatch, "hidden state shape does not match batch");
  if (in.labels.size() < B && pass != Pass::classify)
    throw Error(ErrorKind::dimension_mismatch, "missing labels");
  if (in.frames.size() < (W + (in.has_next ? 1 : 0)) * B * D)
    throw Error(ErrorKind::dimension_mismatch, "window frames too short");
  if (pass == Pass::train && grads == nullptr)
    throw Error(ErrorKind::dimension_mismatch, "training pass needs a gradient buffer");

  WindowStats stats;
  stats.rows = R;
  rows_ = R;
  if (W == 0) return stats;

  const bool with_pred = pass != Pass::classify;
  const bool pred_grad = pass == Pass::train && gamma != 0.0;
  reserve(R, B, with_pred);
  const T* x = in.frames.data();
  if (!finite_range(x, in.frames.size())) throw Error(ErrorKind::non_finite, "input frame is not finite");

  // Encoder and the input half of the gates for every step at once.
  dense(R, D, Ne, x, prm.tensor(Tensor::enc_w), prm.tensor(Tensor::enc_b), e_.data());
  kern::tanh_inplace(e_.data(), R * Ne);
  dense(R, Ne, G, e_.data(), prm.tensor(Tensor::lstm_wx), prm.tensor(Tensor::lstm_b), g_.data());

  std::copy(state.h.begin(), state.h.end(), hext_.begin());
  std::copy(state.c.begin(), state.c.end(), cext_.begin());
  const T* wh = prm.tensor(Tensor::lstm_wh).data();
  for (std::size_t t = 0; t < W; ++t) {
    T* gt = g_.data() + t * B * G;
    const T* hprev = hext_.data() + t * B * H;
    const T* cprev = cext_.data() + t * B * H;
    T* hcur = hext_.data() + (t + 1) * B * H;
    T* ccur = cext_.data() + (t + 1) * B * H;
    T* tct = tc_.data() + t * B * H;
    kern::gemm(Trans::no, Trans::no, B, G, H, hprev, H, wh, G, gt, G, true);
    for (std::size_t b = 0; b < B; ++b) {
      T* z = gt + b * G;
      kern::sigmoid_inplace(z, 2 * H);
      kern::tanh_inplace(z + 2 * H, H);
      kern::sigmoid_inplace(z + 3 * H, H);
      const T* zi = z;
      const T* zf = z + H;
      const T* zg = z + 2 * H;
      T* cc = ccur + b * H;
      const T* cp = cprev + b * H;
      for (std::size_t j = 0; j < H; ++j) cc[j] = zf[j] * cp[j] + zi[j] * zg[j];
    }
    std::copy(ccur, ccur + B * H, tct);
    kern::tanh_inplace(tct, B * H);
    for (std::size_t b = 0; b < B; ++b) {
      const T* zo = gt + b * G + 3 * H;
      const T* tc = tct + b * H;
      T* h = hcur + b * H;
      for (std::size_t j = 0; j < H; ++j) h[j] = zo[j] * tc[j];
    }
  }
  const T* hs = hext_.data() + B * H;  // h_t for every row

  // Classifier head.
  dense(R, H, Nc, hs, prm.tensor(Tensor::cls_w1), prm.tensor(Tensor::cls_b1), u_.data());
  kern::tanh_inplace(u_.data(), R * Nc);
  dense(R, Nc, K, u_.data(), prm.tensor(Tensor::cls_w2), prm.tensor(Tensor::cls_b2), p_.data());
  double cls_loss = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    T* row = p_.data() + r * K;
    const int best = argmax<T>(std::span<const T>(row, K));
    const int label = pass == Pass::classify && in.labels.size() < B ? -1 : in.labels[r % B];
    if (best == label) ++stats.correct;
    if (!argmax_out.empty()) argmax_out[r] = best;
    const T mx = row[best];
    for (std::size_t k = 0; k < K; ++k) row[k] -= mx;
    const T z_label = label >= 0 ? row[label] : T(0);
    kern::exp_inplace(row, K);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += row[k];
    const T inv = static_cast<T>(1.0 / sum);
    for (std::size_t k = 0; k < K; ++k) row[k] *= inv;
    if (label >= 0) cls_loss += std::log(sum) - static_cast<double>(z_label);
  }
  stats.cls_loss = cls_loss;

  // Predictor head: mean and floored softplus scale.
  const std::size_t pred_rows = in.has_next ? R : R - B;  // rows with a next observation
  double pred_nll = 0.0;
  if (with_pred) {
    dense(R, H, Np, hs, prm.tensor(Tensor::pred_w1), prm.tensor(Tensor::pred_b1), v_.data());
    kern::tanh_inplace(v_.data(), R * Np);
    dense(R, Np, P2, v_.data(), prm.tensor(Tensor::pred_w2), prm.tensor(Tensor::pred_b2), o_.data());
    for (std::size_t r = 0; r < R; ++r) {
      const T* pre = o_.data() + r * P2 + D;
      T* s = s_.data() + r * D;
      std::copy(pre, pre + D, s);
      kern::softplus_inplace(s, D);
      for (std::size_t j = 0; j < D; ++j) s[j] += static_cast<T>(kScaleFloor);
    }
    std::vector<unsigned char> use(D, 1);
    if (!in.pred_channels.empty()) {
      if (in.pred_channels.size() != D) throw Error(ErrorKind::dimension_mismatch, "predictor channel mask size");
      std::copy(in.pred_channels.begin(), in.pred_channels.end(), use.begin());
    }
    use_ = use;
    std::vector<T> logs(D);
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (std::size_t r = 0; r < pred_rows; ++r) {
      const T* mu = o_.data() + r * P2;
      const T* s = s_.data() + r * D;
      const T* target = x + (r + B) * D;
      std::copy(s, s + D, logs.begin());
      kern::log_inplace(logs.data(), D);
      double acc = 0.0;
      for (std::size_t j = 0; j < D; ++j) {
        if (!use[j]) continue;
        const double z = (static_cast<double>(target[j]) - mu[j]) / s[j];
        acc += logs[j] + half_log_2pi + 0.5 * z * z;
      }
      pred_nll += acc;
    }
  }
  stats.pred_nll = pred_nll;
  stats.loss = cls_loss + gamma * pred_nll;

  if (with_pred && !std::isfinite(stats.loss))
    throw Error(ErrorKind::non_finite, "window loss is not finite");
  if (!finite_range(hext_.data() + W * B * H, B * H))
    throw Error(ErrorKind::non_finite, "hidden state is not finite");

  if (pass == Pass::train) {
    ParamGradients<T>& gr = *grads;
    dhs_.resize(R * H);
    du_.resize(R * std::max(Nc, Ne));
    dh_.assign(B * H, T(0));
    dc_.assign(B * H, T(0));
    std::vector<T> dl(R * K);

    // Classifier head backward: dlogits = p - onehot.
    for (std::size_t r = 0; r < R; ++r) {
      const T* p = p_.data() + r * K;
      T* d = dl.data() + r * K;
      std::copy(p, p + K, d);
      d[in.labels[r % B]] -= T(1);
    }
    kern::gemm(Trans::yes, Trans::no, Nc, K, R, u_.data(), Nc, dl.data(), K,
               gr.tensor(Tensor::cls_w2).data(), K, true);
    colsum_add(R, K, dl.data(), gr.tensor(Tensor::cls_b2));
    kern::gemm(Trans::no, Trans::yes, R, Nc, K, dl.data(), K, prm.tensor(Tensor::cls_w2).data(), K,
               du_.data(), Nc, false);
    tanh_backward(R * Nc, u_.data(), du_.data());
    kern::gemm(Trans::yes, Trans::no, H, Nc, R, hs, H, du_.data(), Nc,
               gr.tensor(Tensor::cls_w1).data(), Nc, true);
    colsum_add(R, Nc, du_.data(), gr.tensor(Tensor::cls_b1));
    kern::gemm(Trans::no, Trans::yes, R, H, Nc, du_.data(), Nc, prm.tensor(Tensor::cls_w1).data(),
               Nc, dhs_.data(), H, false);

    if (pred_grad) {
      // d(-ln N)/dmu = (mu - x) / s^2 ; d/ds = 1/s - (x - mu)^2 / s^3 ;
      // softplus' = sigmoid(pre). Rows without a next observation get 0.
      const T gm = static_cast<T>(gamma);
      std::vector<T> sig(D);
      for (std::size_t r = 0; r < R; ++r) {
        T* o = o_.data() + r * P2;
        if (r >= pred_rows) {
          std::fill(o, o + P2, T(0));
          continue;
        }
        const T* s = s_.data() + r * D;
        const T* target = x + (r + B) * D;
        std::copy(o + D, o + P2, sig.begin());
        kern::sigmoid_inplace(sig.data(), D);
        for (std::size_t j = 0; j < D; ++j) {
          if (!use_[j]) {
            o[j] = o[D + j] = T(0);
            continue;
          }
          const T inv_s = T(1) / s[j];
          const T z = (target[j] - o[j]) * inv_s;
          o[j] = gm * (-z * inv_s);
          o[D + j] = gm * (inv_s - z * z * inv_s) * sig[j];
        }
      }
      dv_.resize(R * Np);
      kern::gemm(Trans::yes, Trans::no, Np, P2, R, v_.data(), Np, o_.data(), P2,
                 gr.tensor(Tensor::pred_w2).data(), P2, true);
      colsum_add(R, P2, o_.data(), gr.tensor(Tensor::pred_b2));
      kern::gemm(Trans::no, Trans::yes, R, Np, P2, o_.data(), P2,
                 prm.tensor(Tensor::pred_w2).data(), P2, dv_.data(), Np, false);
      tanh_backward(R * Np, v_.data(), dv_.data());
      kern::gemm(Trans::yes, Trans::no, H, Np, R, hs, H, dv_.data(), Np,
                 gr.tensor(Tensor::pred_w1).data(), Np, true);
      colsum_add(R, Np, dv_.data(), gr.tensor(Tensor::pred_b1));
      kern::gemm(Trans::no, Trans::yes, R, H, Np, dv_.data(), Np,
                 prm.tensor(Tensor::pred_w1).data(), Np, dhs_.data(), H, true);
    }

    // Recurrent backward through the window; gate gradients overwrite the
    // stored activations in g_.
    for (std::size_t t = W; t-- > 0;) {
      T* gt = g_.data() + t * B * G;
      const T* cprev = cext_.data() + t * B * H;
      const T* tct = tc_.data() + t * B * H;
      const T* dht = dhs_.data() + t * B * H;
      for (std::size_t b = 0; b < B; ++b) {
        T* z = gt + b * G;
        const T* cp = cprev + b * H;
        const T* tc = tct + b * H;
        const T* dhrow = dht + b * H;
        T* dhn = dh_.data() + b * H;
        T* dcn = dc_.data() + b * H;
        for (std::size_t j = 0; j < H; ++j) {
          const T ig = z[j], fg = z[H + j], gg = z[2 * H + j], og = z[3 * H + j];
          const T dh = dhrow[j] + dhn[j];
          const T dc = dh * og * (T(1) - tc[j] * tc[j]) + dcn[j];
          dcn[j] = dc * fg;
          z[j] = dc * gg * ig * (T(1) - ig);
          z[H + j] = dc * cp[j] * fg * (T(1) - fg);
          z[2 * H + j] = dc * ig * (T(1) - gg * gg);
          z[3 * H + j] = dh * tc[j] * og * (T(1) - og);
        }
      }
      if (t > 0)
        kern::gemm(Trans::no, Trans::yes, B, H, G, gt, G, wh, G, dh_.data(), H, false);
    }
    kern::gemm(Trans::yes, Trans::no, H, G, R, hext_.data(), H, g_.data(), G,
               gr.tensor(Tensor::lstm_wh).data(), G, true);
    kern::gemm(Trans::yes, Trans::no, Ne, G, R, e_.data(), Ne, g_.data(), G,
               gr.tensor(Tensor::lstm_wx).data(), G, true);
    colsum_add(R, G, g_.data(), gr.tensor(Tensor::lstm_b));
    T* de = du_.data();
    kern::gemm(Trans::no, Trans::yes, R, Ne, G, g_.data(), G, prm.tensor(Tensor::lstm_wx).data(), G,
               de, Ne, false);
    tanh_backward(R * Ne, e_.data(), de);
    kern::gemm(Trans::yes, Trans::no, D, Ne, R, x, D, de, Ne, gr.tensor(Tensor::enc_w).data(), Ne,
               true);
    colsum_add(R, Ne, de, gr.tensor(Tensor::enc_b));
  }

  std::copy(hext_.begin() + W * B * H, hext_.begin() + (W + 1) * B * H, state.h.begin());
  std::copy(cext_.begin() + W * B * H, cext_.begin() + (W + 1) * B * H, state.c.begin());
  return stats;
}

namespace {

template <class T>
WindowInput<T> single_window(const SequenceView<T>& seq, StepRange w, const int* label) {
  if (w.begin > w.end || w.end > seq.steps)
    throw Error(ErrorKind::dimension_mismatch, "window outside trajectory");
  const std::size_t D = seq.frames.size() / std::max<std::size_t>(seq.steps, 1);
  WindowInput<T> in;
  in.batch = 1;
  in.steps = w.end - w.begin;
  in.has_next = w.end < seq.steps;
  const std::size_t rows = in.steps + (in.has_next ? 1 : 0);
  in.frames = seq.frames.subspan(w.begin * D, rows * D);
  in.labels = std::span<const int>(label, 1);
  return in;
}

template <class T>
BatchState<T> to_batch(const HiddenState<T>& s) {
  return {1, s.h.size(), s.h, s.c};
}

}  // namespace

template <class T>
StepResult<T> step(std::span<const T> frame, const HiddenState<T>& state, const ModelParams<T>& params) {
  const ArchConfig& a = params.arch;
  if (frame.size() != a.input) throw Error(ErrorKind::dimension_mismatch, "frame size differs from model input");
  if (state.h.size() != a.hidden || state.c.size() != a.hidden)
    throw Error(ErrorKind::dimension_mismatch, "hidden state size differs from model");
  WindowEngine<T> engine(a);
  BatchState<T> bs = to_batch(state);
  const int label = 0;
  WindowInput<T> in{1, 1, frame, false, std::span<const int>(&label, 1)};
  engine.run(Pass::loss, params, in, 0.0, bs, nullptr);
  StepResult<T> out;
  out.state = {bs.h, bs.c};
  const auto p = engine.probs();
  out.probs.assign(p.begin(), p.end());
  const auto mu = engine.pred_mean(0);
  const auto sc = engine.pred_scale(0);
  out.pred.mean.assign(mu.begin(), mu.end());
  out.pred.scale.assign(sc.begin(), sc.end());
  return out;
}

template <class T>
LossResult<T> sequence_loss(const SequenceView<T>& seq, const ModelParams<T>& params,
                            const TrainHyper& hyper, const HiddenState<T>& start, StepRange window) {
  const WindowInput<T> in = single_window(seq, window, &seq.label);
  WindowEngine<T> engine(params.arch);
  BatchState<T> bs = to_batch(start);
  const WindowStats st = engine.run(Pass::loss, params, in, hyper.gamma, bs, nullptr);
  return {st.loss, st.cls_loss, st.pred_nll, {bs.h, bs.c}};
}

template <class T>
ParamGradients<T> gradients(const SequenceView<T>& seq, const ModelParams<T>& params,
                            const TrainHyper& hyper, const HiddenState<T>& start, StepRange window) {
  const WindowInput<T> in = single_window(seq, window, &seq.label);
  WindowEngine<T> engine(params.arch);
  BatchState<T> bs = to_batch(start);
  ParamGradients<T> g = ParamGradients<T>::zeros(params.arch);
  engine.run(Pass::train, params, in, hyper.gamma, bs, &g);
  return g;
}

#define SMI_INSTANTIATE(T)                                                                       \
  template struct ModelParams<T>;                                                                \
  template class WindowEngine<T>;                                                                \
  template ModelParams<T> init_params<T>(const ArchConfig&, std::uint64_t, ParamBudget);         \
  template int argmax<T>(std::span<const T>);                                                    \
  template StepResult<T> step<T>(std::span<const T>, const HiddenState<T>&, const ModelParams<T>&); \
  template LossResult<T> sequence_loss<T>(const SequenceView<T>&, const ModelParams<T>&,         \
                                          const TrainHyper&, const HiddenState<T>&, StepRange);  \
  template ParamGradients<T> gradients<T>(const SequenceView<T>&, const ModelParams<T>&,         \
                                          const TrainHyper&, const HiddenState<T>&, StepRange);

SMI_INSTANTIATE(float)
SMI_INSTANTIATE(double)
#undef SMI_INSTANTIATE

}  // namespace smi::nn
