#pragma once

#include <cmath>

#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Adaptive moment estimation with decoupled weight decay on a flat
/// parameter vector.
template <typename S>
class AdamT {
 public:
  AdamT() = default;
  AdamT(Eigen::Index dim, S lr, S weight_decay = S(0))
      : lr_(lr), wd_(weight_decay), m_(VecXT<S>::Zero(dim)), v_(VecXT<S>::Zero(dim)) {}

  void step(VecXT<S>& params, const VecXT<S>& grad) {
    ++t_;
    m_ = beta1_ * m_ + (S(1) - beta1_) * grad;
    v_ = (beta2_ * v_.array() + (S(1) - beta2_) * grad.array().square()).matrix();
    const S bc1 = S(1) - std::pow(beta1_, S(t_));
    const S bc2 = S(1) - std::pow(beta2_, S(t_));
    params.array() -= lr_ * (m_.array() / bc1) /
                      ((v_.array() / bc2).sqrt() + eps_);
    if (wd_ != S(0)) params.array() -= lr_ * wd_ * params.array();
  }

  void reset() {
    m_.setZero();
    v_.setZero();
    t_ = 0;
  }

 private:
  S lr_ = S(3e-4);
  S wd_ = S(0);
  S beta1_ = S(0.9);
  S beta2_ = S(0.999);
  S eps_ = S(1e-8);
  int t_ = 0;
  VecXT<S> m_, v_;
};

using Adam = AdamT<double>;

}  // namespace mlpcpg
