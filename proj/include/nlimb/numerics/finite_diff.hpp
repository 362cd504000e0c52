#pragma once

#include <Eigen/Core>

#include "nlimb/errors.hpp"

namespace nlimb {

// Central-difference gradient of a scalar function of a flat vector.
template <typename Fn, typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> finite_diff_grad(
    Fn&& f, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, Scalar h) {
  if (!(h > Scalar(0))) throw ContractError("finite_diff_grad: h must be > 0");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad(x.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar xi = x[i];
    probe[i] = xi + h;
    const Scalar up = f(probe);
    probe[i] = xi - h;
    const Scalar down = f(probe);
    probe[i] = xi;
    grad[i] = (up - down) / (Scalar(2) * h);
  }
  return grad;
}

}  // namespace nlimb
