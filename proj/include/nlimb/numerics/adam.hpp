#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "nlimb/errors.hpp"

namespace nlimb {

template <typename Scalar>
struct AdamState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector m;
  Vector v;
  std::int64_t step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  AdamState() = default;
  explicit AdamState(Eigen::Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

using AdamStated = AdamState<double>;

// One bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
template <typename Scalar, typename ParamDerived, typename GradDerived>
void adam_step(AdamState<Scalar>& state,
               Eigen::MatrixBase<ParamDerived> const& params_in,
               const Eigen::MatrixBase<GradDerived>& grads, Scalar lr) {
  auto& params = const_cast<Eigen::MatrixBase<ParamDerived>&>(params_in);
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  if (!grads.allFinite()) throw NumericError("adam_step: non-finite gradient");

  state.step += 1;
  state.m = state.beta1 * state.m + (Scalar(1) - state.beta1) * grads;
  state.v = state.beta2 * state.v +
            (Scalar(1) - state.beta2) * grads.cwiseAbs2();
  const auto t = static_cast<Scalar>(state.step);
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, t);
  params.array() -= lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + state.epsilon);
}

}  // namespace nlimb
