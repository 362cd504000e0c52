#pragma once

#include <cmath>

#include <Eigen/Core>

#include "nlimb/errors.hpp"

namespace nlimb {

template <typename Scalar>
inline constexpr Scalar kHalfLog2Pi =
    Scalar(0.91893853320467274178032973640562);

// Log density of a diagonal Gaussian parameterized by per-dimension log
// standard deviation.
template <typename MeanDerived, typename LogStdDerived, typename XDerived>
typename MeanDerived::Scalar gaussian_log_prob(
    const Eigen::MatrixBase<MeanDerived>& mean,
    const Eigen::MatrixBase<LogStdDerived>& log_std,
    const Eigen::MatrixBase<XDerived>& x) {
  using Scalar = typename MeanDerived::Scalar;
  if (mean.size() != log_std.size() || mean.size() != x.size())
    throw ShapeError("gaussian_log_prob: argument lengths differ");
  const auto z = ((x - mean).array() * (-log_std.array()).exp());
  return Scalar(-0.5) * z.square().sum() - log_std.sum() -
         static_cast<Scalar>(mean.size()) * kHalfLog2Pi<Scalar>;
}

// Column-wise log density for batches: means and xs are (dim x batch).
template <typename MeanDerived, typename LogStdDerived, typename XDerived>
Eigen::Matrix<typename MeanDerived::Scalar, Eigen::Dynamic, 1>
gaussian_log_prob_cols(const Eigen::MatrixBase<MeanDerived>& means,
                       const Eigen::MatrixBase<LogStdDerived>& log_std,
                       const Eigen::MatrixBase<XDerived>& xs) {
  using Scalar = typename MeanDerived::Scalar;
  if (means.rows() != log_std.size() || xs.rows() != means.rows() ||
      xs.cols() != means.cols())
    throw ShapeError("gaussian_log_prob_cols: shape mismatch");
  const auto inv_std = (-log_std.array()).exp().matrix().asDiagonal();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z =
      inv_std * (xs - means);
  const Scalar norm =
      log_std.sum() + static_cast<Scalar>(means.rows()) * kHalfLog2Pi<Scalar>;
  return (Scalar(-0.5) * z.colwise().squaredNorm().array() - norm)
      .matrix()
      .transpose();
}

// Differential entropy of a diagonal Gaussian.
template <typename LogStdDerived>
typename LogStdDerived::Scalar gaussian_entropy(
    const Eigen::MatrixBase<LogStdDerived>& log_std) {
  using Scalar = typename LogStdDerived::Scalar;
  return log_std.sum() + static_cast<Scalar>(log_std.size()) *
                             (Scalar(0.5) + kHalfLog2Pi<Scalar>);
}

}  // namespace nlimb
