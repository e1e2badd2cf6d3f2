#pragma once

#include <Eigen/QR>

#include "mlpcpg/rng.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Two-hidden-layer tanh network with parameters stored as one flat vector
/// (optimizer- and checkpoint-friendly). Forward/backward operate on column
/// batches so training updates run as matrix products.
template <typename S>
class DenseNetT {
 public:
  DenseNetT() = default;
  DenseNetT(int in, int hidden, int out) : in_(in), hidden_(hidden), out_(out) {
    flat_.setZero(num_params(in, hidden, out));
  }

  static int num_params(int in, int hidden, int out) {
    return hidden * in + hidden + hidden * hidden + hidden + out * hidden + out;
  }

  int in_dim() const { return in_; }
  int hidden_dim() const { return hidden_; }
  int out_dim() const { return out_; }

  VecXT<S>& flat() { return flat_; }
  const VecXT<S>& flat() const { return flat_; }

  using MapM = Eigen::Map<MatXT<S>>;
  using MapV = Eigen::Map<VecXT<S>>;
  using CMapM = Eigen::Map<const MatXT<S>>;
  using CMapV = Eigen::Map<const VecXT<S>>;

  MapM w1() { return MapM(flat_.data(), hidden_, in_); }
  MapV b1() { return MapV(flat_.data() + hidden_ * in_, hidden_); }
  MapM w2() { return MapM(flat_.data() + off2(), hidden_, hidden_); }
  MapV b2() { return MapV(flat_.data() + off2() + hidden_ * hidden_, hidden_); }
  MapM w3() { return MapM(flat_.data() + off3(), out_, hidden_); }
  MapV b3() { return MapV(flat_.data() + off3() + out_ * hidden_, out_); }
  CMapM w1() const { return CMapM(flat_.data(), hidden_, in_); }
  CMapV b1() const { return CMapV(flat_.data() + hidden_ * in_, hidden_); }
  CMapM w2() const { return CMapM(flat_.data() + off2(), hidden_, hidden_); }
  CMapV b2() const { return CMapV(flat_.data() + off2() + hidden_ * hidden_, hidden_); }
  CMapM w3() const { return CMapM(flat_.data() + off3(), out_, hidden_); }
  CMapV b3() const { return CMapV(flat_.data() + off3() + out_ * hidden_, out_); }

  struct Cache {
    MatXT<S> x;   // input batch (in x B)
    MatXT<S> h1;  // tanh activations (hidden x B)
    MatXT<S> h2;
  };

  /// Forward pass on a column batch; fills the cache for backward.
  MatXT<S> forward(const MatXT<S>& x, Cache* cache = nullptr) const {
    MatXT<S> h1 = ((w1() * x).colwise() + b1()).array().tanh();
    MatXT<S> h2 = ((w2() * h1).colwise() + b2()).array().tanh();
    MatXT<S> y = (w3() * h2).colwise() + b3();
    if (cache) {
      cache->x = x;
      cache->h1 = std::move(h1);
      cache->h2 = std::move(h2);
    }
    return y;
  }

  /// Backward pass. Accumulates parameter gradients into grad_flat (same
  /// layout as flat()) and optionally returns the gradient w.r.t. the input.
  void backward(const Cache& cache, const MatXT<S>& d_y, VecXT<S>* grad_flat,
                MatXT<S>* d_x = nullptr) const {
    DenseNetT<S> g_view;  // map the gradient vector with the same layout
    g_view.in_ = in_;
    g_view.hidden_ = hidden_;
    g_view.out_ = out_;

    MatXT<S> d_h2 = w3().transpose() * d_y;
    d_h2.array() *= (S(1) - cache.h2.array().square());
    MatXT<S> d_h1 = w2().transpose() * d_h2;
    d_h1.array() *= (S(1) - cache.h1.array().square());

    if (grad_flat) {
      if (grad_flat->size() != flat_.size()) grad_flat->setZero(flat_.size());
      g_view.flat_.setZero(flat_.size());
      g_view.w3() = d_y * cache.h2.transpose();
      g_view.b3() = d_y.rowwise().sum();
      g_view.w2() = d_h2 * cache.h1.transpose();
      g_view.b2() = d_h2.rowwise().sum();
      g_view.w1() = d_h1 * cache.x.transpose();
      g_view.b1() = d_h1.rowwise().sum();
      *grad_flat += g_view.flat_;
    }
    if (d_x) *d_x = w1().transpose() * d_h1;
  }

  /// Orthogonal init for hidden layers; the output layer is scaled down so
  /// that the untrained network output stays near zero.
  void init(Rng& rng, S out_scale = S(0.01)) {
    orthogonal(w1(), rng, S(1));
    orthogonal(w2(), rng, S(1));
    orthogonal(w3(), rng, out_scale);
    b1().setZero();
    b2().setZero();
    b3().setZero();
  }

 private:
  int off2() const { return hidden_ * in_ + hidden_; }
  int off3() const { return off2() + hidden_ * hidden_ + hidden_; }

  template <typename Map>
  static void orthogonal(Map m, Rng& rng, S gain) {
    MatX a(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    const bool wide = a.rows() < a.cols();
    MatX q;
    if (wide) {
      Eigen::HouseholderQR<MatX> qr(a.transpose());
      q = MatX(qr.householderQ()).leftCols(a.rows()).transpose();
    } else {
      Eigen::HouseholderQR<MatX> qr(a);
      q = MatX(qr.householderQ()).leftCols(a.cols());
    }
    m = (gain * q).template cast<S>();
  }

  int in_ = 0, hidden_ = 0, out_ = 0;
  VecXT<S> flat_;
};

using DenseNet = DenseNetT<double>;

}  // namespace mlpcpg
