#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mlpcpg {

inline constexpr int kNumJoints = 12;
inline constexpr int kNumLegs = 4;
inline constexpr int kObsDim = 60;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

template <typename S> using Vec12T = Eigen::Matrix<S, kNumJoints, 1>;
template <typename S> using Mat12T = Eigen::Matrix<S, kNumJoints, kNumJoints>;
template <typename S> using VecXT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S> using MatXT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Vec3 = Eigen::Vector3d;
using Vec12 = Vec12T<double>;
using Mat12 = Mat12T<double>;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Thrown when an input to a math-core operation is out of its domain
/// (non-finite values, bound violations). The message names the field.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* field) {
  if (!m.allFinite()) throw DomainError(std::string("non-finite value in ") + field);
}

inline void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite value in ") + field);
}

}  // namespace mlpcpg
