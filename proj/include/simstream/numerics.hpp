#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "simstream/tensor.hpp"

namespace simstream {

// ---------------------------------------------------------------------------
// Dense kernels
// ---------------------------------------------------------------------------

template <typename T>
T dot(const T* a, const T* b, int n) {
  T s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// y = W x
template <typename T>
void matvec(const Mat<T>& w, const T* x, T* y) {
  for (int r = 0; r < w.rows; ++r) y[r] = dot(w.row(r), x, w.cols);
}

// y += W x
template <typename T>
void matvec_add(const Mat<T>& w, const T* x, T* y) {
  for (int r = 0; r < w.rows; ++r) y[r] += dot(w.row(r), x, w.cols);
}

// x += W^T y
template <typename T>
void matvec_transpose_add(const Mat<T>& w, const T* y, T* x) {
  for (int r = 0; r < w.rows; ++r) {
    const T yr = y[r];
    if (yr == T(0)) continue;
    const T* wr = w.row(r);
    for (int c = 0; c < w.cols; ++c) x[c] += wr[c] * yr;
  }
}

// W += y x^T
template <typename T>
void add_outer(Mat<T>& w, const T* y, const T* x) {
  for (int r = 0; r < w.rows; ++r) {
    const T yr = y[r];
    if (yr == T(0)) continue;
    T* wr = w.row(r);
    for (int c = 0; c < w.cols; ++c) wr[c] += yr * x[c];
  }
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// ---------------------------------------------------------------------------
// LSTM cell
// ---------------------------------------------------------------------------

// Gate order inside the stacked [4H] dimension: input, forget, cell
// candidate, output.
template <typename T>
struct LstmCellParams {
  Mat<T> w_input;       // [4H x input_dim]
  Mat<T> w_recur;       // [4H x H]
  std::vector<T> bias;  // [4H]

  int hidden() const { return w_recur.cols; }
  int input_dim() const { return w_input.cols; }
};

template <typename T>
struct LstmCellGrads {
  Mat<T> w_input;
  Mat<T> w_recur;
  std::vector<T> bias;
};

template <typename U, typename T>
LstmCellParams<U> cast_cell(const LstmCellParams<T>& p) {
  LstmCellParams<U> out;
  out.w_input = cast_mat<U>(p.w_input);
  out.w_recur = cast_mat<U>(p.w_recur);
  out.bias.assign(p.bias.begin(), p.bias.end());
  return out;
}

// One forward step with everything the backward pass needs retained.
template <typename T>
struct LstmStep {
  std::vector<T> gates;  // [4H] post-activation: i, f, g, o
  std::vector<T> c;
  std::vector<T> h;
};

template <typename T>
LstmStep<T> lstm_cell_forward(std::span<const T> x, std::span<const T> h_prev,
                              std::span<const T> c_prev,
                              const LstmCellParams<T>& p) {
  const int h = p.hidden();
  if (p.w_input.rows != 4 * h || static_cast<int>(p.bias.size()) != 4 * h ||
      static_cast<int>(x.size()) != p.input_dim() ||
      static_cast<int>(h_prev.size()) != h ||
      static_cast<int>(c_prev.size()) != h) {
    throw std::invalid_argument("lstm_cell_forward: dimension mismatch");
  }
  LstmStep<T> s;
  s.gates.assign(static_cast<std::size_t>(4) * h, T(0));
  matvec(p.w_input, x.data(), s.gates.data());
  matvec_add(p.w_recur, h_prev.data(), s.gates.data());
  for (int j = 0; j < 4 * h; ++j) s.gates[j] += p.bias[j];
  for (int j = 0; j < h; ++j) {
    s.gates[j] = sigmoid(s.gates[j]);                    // i
    s.gates[h + j] = sigmoid(s.gates[h + j]);            // f
    s.gates[2 * h + j] = std::tanh(s.gates[2 * h + j]);  // g
    s.gates[3 * h + j] = sigmoid(s.gates[3 * h + j]);    // o
  }
  s.c.resize(h);
  s.h.resize(h);
  for (int j = 0; j < h; ++j) {
    s.c[j] = s.gates[h + j] * c_prev[j] + s.gates[j] * s.gates[2 * h + j];
    s.h[j] = s.gates[3 * h + j] * std::tanh(s.c[j]);
  }
  return s;
}

// Backward through one cell step. dh/dc_in flow into this step's outputs;
// dx, dh_prev and dc_prev are accumulated, as are the parameter grads.
template <typename T>
void lstm_cell_backward(const LstmCellParams<T>& p, std::span<const T> x,
                        std::span<const T> h_prev, std::span<const T> c_prev,
                        const LstmStep<T>& step, std::span<const T> dh,
                        std::span<const T> dc_in, LstmCellGrads<T>& g,
                        std::span<T> dx, std::span<T> dh_prev,
                        std::span<T> dc_prev) {
  const int h = p.hidden();
  std::vector<T> dz(static_cast<std::size_t>(4) * h);
  for (int j = 0; j < h; ++j) {
    const T gi = step.gates[j];
    const T gf = step.gates[h + j];
    const T gg = step.gates[2 * h + j];
    const T go = step.gates[3 * h + j];
    const T tc = std::tanh(step.c[j]);
    const T dcj = dc_in[j] + dh[j] * go * (T(1) - tc * tc);
    dz[3 * h + j] = dh[j] * tc * go * (T(1) - go);
    dz[j] = dcj * gg * gi * (T(1) - gi);
    dz[h + j] = dcj * c_prev[j] * gf * (T(1) - gf);
    dz[2 * h + j] = dcj * gi * (T(1) - gg * gg);
    dc_prev[j] += dcj * gf;
  }
  add_outer(g.w_input, dz.data(), x.data());
  add_outer(g.w_recur, dz.data(), h_prev.data());
  for (int j = 0; j < 4 * h; ++j) g.bias[j] += dz[j];
  matvec_transpose_add(p.w_input, dz.data(), dx.data());
  matvec_transpose_add(p.w_recur, dz.data(), dh_prev.data());
}

// ---------------------------------------------------------------------------
// Softmax / cross-entropy
// ---------------------------------------------------------------------------

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const T v : logits) mx = std::max(mx, static_cast<double>(v));
  std::vector<T> out(logits.size());
  double z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double e = std::exp(static_cast<double>(logits[i]) - mx);
    out[i] = static_cast<T>(e);
    z += e;
  }
  for (auto& v : out) v = static_cast<T>(static_cast<double>(v) / z);
  return out;
}

template <typename T>
std::vector<T> log_softmax(std::span<const T> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const T v : logits) mx = std::max(mx, static_cast<double>(v));
  double z = 0;
  for (const T v : logits) z += std::exp(static_cast<double>(v) - mx);
  const double lse = mx + std::log(z);
  std::vector<T> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = static_cast<T>(static_cast<double>(logits[i]) - lse);
  return out;
}

template <typename T>
struct CrossEntropyOut {
  T loss;
  std::vector<T> grad;  // softmax(logits) - one_hot(target)
};

template <typename T>
CrossEntropyOut<T> softmax_cross_entropy(std::span<const T> logits,
                                         int target) {
  if (target < 0 || target >= static_cast<int>(logits.size()))
    throw std::invalid_argument("softmax_cross_entropy: target out of range");
  double mx = -std::numeric_limits<double>::infinity();
  for (const T v : logits) mx = std::max(mx, static_cast<double>(v));
  double z = 0;
  for (const T v : logits) z += std::exp(static_cast<double>(v) - mx);
  const double lse = mx + std::log(z);
  CrossEntropyOut<T> out;
  out.loss =
      static_cast<T>(std::max(0.0, lse - static_cast<double>(logits[target])));
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    out.grad[i] =
        static_cast<T>(std::exp(static_cast<double>(logits[i]) - lse));
  out.grad[target] -= T(1);
  return out;
}

// ---------------------------------------------------------------------------
// Attention (dot-product scores over stored encoder states)
// ---------------------------------------------------------------------------

template <typename T>
struct AttentionOut {
  std::vector<T> weights;  // probability distribution over states
  std::vector<T> context;  // weighted sum of states
};

template <typename T>
AttentionOut<T> attention(std::span<const std::vector<T>> enc_states,
                          std::span<const T> query) {
  if (enc_states.empty())
    throw std::invalid_argument("attention: empty encoder state list");
  const int h = static_cast<int>(query.size());
  std::vector<T> scores(enc_states.size());
  for (std::size_t j = 0; j < enc_states.size(); ++j) {
    if (static_cast<int>(enc_states[j].size()) != h)
      throw std::invalid_argument("attention: state dimension mismatch");
    scores[j] = dot(query.data(), enc_states[j].data(), h);
  }
  AttentionOut<T> out;
  out.weights = softmax<T>(scores);
  out.context.assign(h, T(0));
  for (std::size_t j = 0; j < enc_states.size(); ++j) {
    const T wj = out.weights[j];
    const T* s = enc_states[j].data();
    for (int i = 0; i < h; ++i) out.context[i] += wj * s[i];
  }
  return out;
}

// dcontext (and optionally dweights) flow in; dquery and denc_states are
// accumulated.
template <typename T>
void attention_backward(std::span<const std::vector<T>> enc_states,
                        std::span<const T> query, std::span<const T> weights,
                        std::span<const T> dcontext,
                        std::span<const T> dweights, std::span<T> dquery,
                        std::span<std::vector<T>> denc_states) {
  const int h = static_cast<int>(query.size());
  const std::size_t n = enc_states.size();
  std::vector<T> dw(n);
  for (std::size_t j = 0; j < n; ++j) {
    dw[j] = dot(enc_states[j].data(), dcontext.data(), h);
    if (!dweights.empty()) dw[j] += dweights[j];
  }
  T s = 0;
  for (std::size_t j = 0; j < n; ++j) s += weights[j] * dw[j];
  for (std::size_t j = 0; j < n; ++j) {
    const T dscore = weights[j] * (dw[j] - s);
    const T* ej = enc_states[j].data();
    T* dj = denc_states[j].data();
    const T wj = weights[j];
    for (int i = 0; i < h; ++i) {
      dquery[i] += dscore * ej[i];
      dj[i] += dscore * query[i] + wj * dcontext[i];
    }
  }
}

// ---------------------------------------------------------------------------
// SGD with optional global-norm clipping
// ---------------------------------------------------------------------------

template <typename T>
struct ParamGradBind {
  T* param = nullptr;
  const T* grad = nullptr;
  std::size_t n = 0;
};

template <typename T>
double global_grad_norm(std::span<const ParamGradBind<T>> binds) {
  double s = 0;
  for (const auto& b : binds)
    for (std::size_t i = 0; i < b.n; ++i) {
      const double g = static_cast<double>(b.grad[i]);
      s += g * g;
    }
  return std::sqrt(s);
}

template <typename T>
void sgd_step(std::span<const ParamGradBind<T>> binds, double lr,
              std::optional<double> clip) {
  if (lr < 0) throw std::invalid_argument("sgd_step: negative learning rate");
  double scale = 1.0;
  if (clip) {
    if (*clip <= 0) throw std::invalid_argument("sgd_step: clip must be > 0");
    const double norm = global_grad_norm(binds);
    if (norm > *clip) scale = *clip / norm;
  }
  const double step = lr * scale;
  for (const auto& b : binds)
    for (std::size_t i = 0; i < b.n; ++i)
      b.param[i] -= static_cast<T>(step * static_cast<double>(b.grad[i]));
}

// ---------------------------------------------------------------------------
// Finite-difference gradient oracle (64-bit only)
// ---------------------------------------------------------------------------

struct GradCheckTensor {
  std::string name;
  double* data = nullptr;
  const double* grad = nullptr;
  std::size_t n = 0;
};

// Central differences (f(x+e) - f(x-e)) / 2e against analytic gradients.
// loss_fn must be deterministic and read the tensors behind `items`.
inline double grad_check(const std::function<double()>& loss_fn,
                         std::span<const GradCheckTensor> items, double eps) {
  double max_rel = 0;
  for (const auto& t : items) {
    for (std::size_t i = 0; i < t.n; ++i) {
      const double orig = t.data[i];
      t.data[i] = orig + eps;
      const double lp = loss_fn();
      t.data[i] = orig - eps;
      const double lm = loss_fn();
      t.data[i] = orig;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw std::runtime_error("grad_check: non-finite loss while probing " +
                                 t.name);
      const double numeric = (lp - lm) / (2 * eps);
      const double analytic = t.grad[i];
      // The denominator floor keeps finite-difference rounding noise on
      // near-zero gradient entries from registering as relative error.
      const double rel = std::abs(numeric - analytic) /
                         std::max(1e-4, std::abs(numeric) + std::abs(analytic));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace simstream
