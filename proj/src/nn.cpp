#include "stacktag/nn.hpp"

#include <cmath>

namespace stacktag {

void init_uniform(Tensor& t, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      t.value(i, j) = rng.uniform(-bound, bound);
    }
  }
}

void zero_grads(const TensorRefs& params) {
  for (Tensor* p : params) p->grad.setZero();
}

double grad_norm(const TensorRefs& params) {
  double sq = 0.0;
  for (const Tensor* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void clip_grads(const TensorRefs& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (Tensor* p : params) p->grad *= scale;
}

void sgd_step(const TensorRefs& params, double lr) {
  for (Tensor* p : params) p->value -= lr * p->grad;
}

void Adam::step(const TensorRefs& params) {
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor* p = params[k];
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * p->grad;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * p->grad.cwiseAbs2();
    p->value.array() -=
        lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

Lstm::Lstm(const std::string& prefix, int input_dim, int hidden_dim)
    : wx(prefix + "wx", 4 * hidden_dim, input_dim),
      wh(prefix + "wh", 4 * hidden_dim, hidden_dim),
      b(prefix + "b", 4 * hidden_dim, 1) {}

void Lstm::init(Rng& rng) {
  init_uniform(wx, std::sqrt(1.0 / std::max(1, input_dim())), rng);
  init_uniform(wh, std::sqrt(1.0 / std::max(1, hidden_dim())), rng);
  b.value.setZero();
  const int h = hidden_dim();
  b.value.block(h, 0, h, 1).setOnes();
}

namespace {

// Applies gate nonlinearities in place to the 4h pre-activation vector.
void activate(Eigen::Ref<Vector> z, int h) {
  for (int k = 0; k < h; ++k) {
    z(k) = sigmoid(z(k));
    z(h + k) = sigmoid(z(h + k));
    z(2 * h + k) = std::tanh(z(2 * h + k));
    z(3 * h + k) = sigmoid(z(3 * h + k));
  }
}

}  // namespace

LstmTrace lstm_forward(const Lstm& lstm, const Matrix& x, const Vector& h0,
                       const Vector& c0) {
  const int h = lstm.hidden_dim();
  const Eigen::Index steps = x.cols();
  LstmTrace tr;
  tr.x = x;
  tr.h0 = h0;
  tr.c0 = c0;
  tr.gates.resize(4 * h, steps);
  tr.c.resize(h, steps);
  tr.h.resize(h, steps);
  if (steps == 0) return tr;
  tr.gates.noalias() = lstm.wx.value * x;
  tr.gates.colwise() += lstm.b.value.col(0);
  Vector h_prev = h0, c_prev = c0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    tr.gates.col(t).noalias() += lstm.wh.value * h_prev;
    activate(tr.gates.col(t), h);
    const auto g = tr.gates.col(t);
    tr.c.col(t) = g.segment(h, h).cwiseProduct(c_prev) +
                  g.segment(0, h).cwiseProduct(g.segment(2 * h, h));
    tr.h.col(t) = g.segment(3 * h, h).cwiseProduct(tr.c.col(t).array().tanh().matrix());
    h_prev = tr.h.col(t);
    c_prev = tr.c.col(t);
  }
  return tr;
}

Matrix lstm_infer(const Lstm& lstm, const Matrix& x, const Vector& h0,
                  const Vector& c0, Vector* h_last, Vector* c_last) {
  const int h = lstm.hidden_dim();
  Matrix out(h, x.cols());
  Matrix pre = lstm.wx.value * x;
  pre.colwise() += lstm.b.value.col(0);
  Vector hp = h0, cp = c0, z(4 * h);
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    z = pre.col(t);
    z.noalias() += lstm.wh.value * hp;
    activate(z, h);
    cp = z.segment(h, h).cwiseProduct(cp) + z.segment(0, h).cwiseProduct(z.segment(2 * h, h));
    hp = z.segment(3 * h, h).cwiseProduct(cp.array().tanh().matrix());
    out.col(t) = hp;
  }
  if (h_last) *h_last = hp;
  if (c_last) *c_last = cp;
  return out;
}

Matrix lstm_backward(Lstm& lstm, const LstmTrace& tr, const Matrix& dh, Vector* dh0,
                     Vector* dc0) {
  const int h = lstm.hidden_dim();
  const Eigen::Index steps = tr.x.cols();
  Matrix dz(4 * h, steps);
  Vector dh_next = Vector::Zero(h);
  Vector dc_next = Vector::Zero(h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto g = tr.gates.col(t);
    const Vector c_prev = t > 0 ? Vector(tr.c.col(t - 1)) : tr.c0;
    const Vector tanh_c = tr.c.col(t).array().tanh();
    const Vector dht = dh.col(t) + dh_next;
    const Vector dct = dc_next + dht.cwiseProduct(g.segment(3 * h, h))
                                     .cwiseProduct((1.0 - tanh_c.array().square()).matrix());
    const auto gi = g.segment(0, h).array();
    const auto gf = g.segment(h, h).array();
    const auto gg = g.segment(2 * h, h).array();
    const auto go = g.segment(3 * h, h).array();
    dz.col(t).segment(0, h) = (dct.array() * gg * gi * (1.0 - gi)).matrix();
    dz.col(t).segment(h, h) = (dct.array() * c_prev.array() * gf * (1.0 - gf)).matrix();
    dz.col(t).segment(2 * h, h) = (dct.array() * gi * (1.0 - gg.square())).matrix();
    dz.col(t).segment(3 * h, h) = (dht.array() * tanh_c.array() * go * (1.0 - go)).matrix();
    dh_next.noalias() = lstm.wh.value.transpose() * dz.col(t);
    dc_next = (dct.array() * gf).matrix();
  }
  if (steps > 0) {
    lstm.wx.grad.noalias() += dz * tr.x.transpose();
    Matrix h_prev(h, steps);
    h_prev.col(0) = tr.h0;
    if (steps > 1) h_prev.rightCols(steps - 1) = tr.h.leftCols(steps - 1);
    lstm.wh.grad.noalias() += dz * h_prev.transpose();
    lstm.b.grad.col(0) += dz.rowwise().sum();
  }
  if (dh0) *dh0 = dh_next;
  if (dc0) *dc0 = dc_next;
  return lstm.wx.value.transpose() * dz;
}

}  // namespace stacktag
