#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace stacktag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Seeded generator; every stochastic component takes one of these so runs
// are reproducible bit for bit on a single thread.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::generate_canonical<double, 53>(engine_);
  }
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform(0.0, 1.0) * static_cast<double>(n)) % n;
  }
  std::uint64_t next() { return engine_(); }

  template <typename It>
  void shuffle(It first, It last) {
    for (auto n = last - first; n > 1; --n) {
      std::swap(first[n - 1], first[index(static_cast<std::size_t>(n))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// A trainable tensor with its accumulated gradient. Vectors are stored as
// single-column matrices so every parameter shares one representation.
struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
};

using TensorRefs = std::vector<Tensor*>;
using ConstTensorRefs = std::vector<const Tensor*>;

void init_uniform(Tensor& t, double bound, Rng& rng);
void zero_grads(const TensorRefs& params);
double grad_norm(const TensorRefs& params);
// Rescales gradients so their global L2 norm is at most max_norm.
void clip_grads(const TensorRefs& params, double max_norm);
void sgd_step(const TensorRefs& params, double lr);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const TensorRefs& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable log(sum(exp(v))).
double log_sum_exp(const Eigen::Ref<const Vector>& v);

// Single-layer LSTM, gate order (input, forget, cell, output).
struct Lstm {
  Tensor wx;  // 4h x in
  Tensor wh;  // 4h x h
  Tensor b;   // 4h x 1

  Lstm() = default;
  Lstm(const std::string& prefix, int input_dim, int hidden_dim);

  int input_dim() const { return static_cast<int>(wx.value.cols()); }
  int hidden_dim() const { return static_cast<int>(wh.value.cols()); }

  // Uniform in +-sqrt(1/fan_in), zero bias, forget-gate bias +1.
  void init(Rng& rng);
  TensorRefs params() { return {&wx, &wh, &b}; }
};

// Activations of one forward pass, kept for backpropagation. Columns are
// time steps.
struct LstmTrace {
  Matrix x;      // in x T
  Matrix gates;  // 4h x T, post-nonlinearity
  Matrix c;      // h x T
  Matrix h;      // h x T
  Vector h0, c0;
};

LstmTrace lstm_forward(const Lstm& lstm, const Matrix& x, const Vector& h0,
                       const Vector& c0);

// Same recurrence without storing activations; returns hidden states.
Matrix lstm_infer(const Lstm& lstm, const Matrix& x, const Vector& h0,
                  const Vector& c0, Vector* h_last = nullptr, Vector* c_last = nullptr);

// Accumulates parameter gradients into lstm.*.grad and returns dL/dx.
// dh holds dL/dh_t for every step. When given, dh0/dc0 receive the
// gradient with respect to the initial state.
Matrix lstm_backward(Lstm& lstm, const LstmTrace& trace, const Matrix& dh,
                     Vector* dh0 = nullptr, Vector* dc0 = nullptr);

}  // namespace stacktag
