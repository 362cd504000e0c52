#pragma once

// Dense multilayer perceptron with tanh hidden layers and a linear output
// layer. Parameters live in one contiguous vector so optimizers and gradient
// checks can treat them as a flat array; per-layer weights and biases are
// exposed as Eigen maps into that storage.
//
// Batched inputs are matrices with one sample per column.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nlimb/errors.hpp"
#include "nlimb/random.hpp"

namespace nlimb {

enum class Activation { kTanh };

struct MlpSpec {
  std::vector<Eigen::Index> layer_sizes;  // input, hidden..., output
  Activation hidden_activation = Activation::kTanh;

  Eigen::Index input_size() const { return layer_sizes.front(); }
  Eigen::Index output_size() const { return layer_sizes.back(); }
  Eigen::Index num_layers() const {
    return static_cast<Eigen::Index>(layer_sizes.size()) - 1;
  }

  void validate() const {
    if (layer_sizes.size() < 2)
      throw ShapeError("MlpSpec needs at least an input and an output size");
    for (auto s : layer_sizes)
      if (s < 1) throw ShapeError("MlpSpec layer sizes must be >= 1");
  }

  bool operator==(const MlpSpec&) const = default;
};

template <typename Scalar>
class MlpParams {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using WeightMap = Eigen::Map<Matrix>;
  using ConstWeightMap = Eigen::Map<const Matrix>;
  using BiasMap = Eigen::Map<Vector>;
  using ConstBiasMap = Eigen::Map<const Vector>;

  MlpParams() = default;

  // All-zero parameters shaped by `spec`.
  explicit MlpParams(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    Eigen::Index offset = 0;
    for (Eigen::Index l = 0; l < spec_.num_layers(); ++l) {
      offsets_.push_back(offset);
      offset += rows(l) * cols(l) + rows(l);
    }
    flat_ = Vector::Zero(offset);
  }

  const MlpSpec& spec() const { return spec_; }
  Eigen::Index num_layers() const { return spec_.num_layers(); }
  Eigen::Index size() const { return flat_.size(); }

  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

  WeightMap weight(Eigen::Index l) {
    return WeightMap(flat_.data() + offsets_[l], rows(l), cols(l));
  }
  ConstWeightMap weight(Eigen::Index l) const {
    return ConstWeightMap(flat_.data() + offsets_[l], rows(l), cols(l));
  }
  BiasMap bias(Eigen::Index l) {
    return BiasMap(flat_.data() + bias_offset(l), rows(l));
  }
  ConstBiasMap bias(Eigen::Index l) const {
    return ConstBiasMap(flat_.data() + bias_offset(l), rows(l));
  }

  // Offsets of layer l's weight block and bias block inside flat().
  Eigen::Index weight_offset(Eigen::Index l) const { return offsets_[l]; }
  Eigen::Index bias_offset(Eigen::Index l) const {
    return offsets_[l] + rows(l) * cols(l);
  }

  Eigen::Index rows(Eigen::Index l) const { return spec_.layer_sizes[l + 1]; }
  Eigen::Index cols(Eigen::Index l) const { return spec_.layer_sizes[l]; }

 private:
  MlpSpec spec_;
  std::vector<Eigen::Index> offsets_;
  Vector flat_;
};

using MlpParamsd = MlpParams<double>;

// Post-activation values of every layer; activations[0] is the input.
template <typename Scalar>
struct MlpCache {
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>
      activations;
};

template <typename Scalar>
struct MlpForward {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> output;
  MlpCache<Scalar> cache;
};

template <typename Scalar>
struct MlpGradients {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> params;  // aligned with flat()
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> input;
};

namespace detail {

template <typename Scalar, typename Derived>
void check_input(const MlpParams<Scalar>& params,
                 const Eigen::MatrixBase<Derived>& input) {
  if (params.num_layers() == 0) throw ShapeError("MLP has no layers");
  if (input.rows() != params.spec().input_size())
    throw ShapeError("MLP input has " + std::to_string(input.rows()) +
                     " rows, expected " +
                     std::to_string(params.spec().input_size()));
}

}  // namespace detail

// Output only; no activation record.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> mlp_predict(
    const MlpParams<Scalar>& params, const Eigen::MatrixBase<Derived>& input) {
  detail::check_input(params, input);
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix a = input;
  const auto last = params.num_layers() - 1;
  for (Eigen::Index l = 0; l <= last; ++l) {
    Matrix z = params.weight(l) * a;
    z.colwise() += params.bias(l);
    if (l < last) z = z.array().tanh();
    a.swap(z);
  }
  return a;
}

template <typename Scalar, typename Derived>
MlpForward<Scalar> mlp_forward(const MlpParams<Scalar>& params,
                               const Eigen::MatrixBase<Derived>& input) {
  detail::check_input(params, input);
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  MlpForward<Scalar> out;
  auto& acts = out.cache.activations;
  acts.reserve(params.num_layers() + 1);
  acts.emplace_back(input);
  const auto last = params.num_layers() - 1;
  for (Eigen::Index l = 0; l <= last; ++l) {
    Matrix z = params.weight(l) * acts.back();
    z.colwise() += params.bias(l);
    if (l < last) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  out.output = acts.back();
  return out;
}

// Gradients of the scalar sum_{i,j} output_grad(i,j) * output(i,j), summed
// over the batch columns.
template <typename Scalar, typename Derived>
MlpGradients<Scalar> mlp_backward(const MlpParams<Scalar>& params,
                                  const MlpCache<Scalar>& cache,
                                  const Eigen::MatrixBase<Derived>& output_grad) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const auto& acts = cache.activations;
  const auto layers = params.num_layers();
  if (static_cast<Eigen::Index>(acts.size()) != layers + 1)
    throw ShapeError("MLP cache does not match parameter layer count");
  for (Eigen::Index l = 0; l <= layers; ++l)
    if (acts[l].rows() != params.spec().layer_sizes[l] ||
        acts[l].cols() != acts[0].cols())
      throw ShapeError("MLP cache activation shape mismatch at layer " +
                       std::to_string(l));
  if (output_grad.rows() != acts.back().rows() ||
      output_grad.cols() != acts.back().cols())
    throw ShapeError("MLP output gradient shape mismatch");

  MlpGradients<Scalar> grads;
  grads.params.setZero(params.size());
  Matrix delta = output_grad;
  for (Eigen::Index l = layers - 1; l >= 0; --l) {
    Eigen::Map<Matrix> dw(grads.params.data() + params.weight_offset(l),
                          params.rows(l), params.cols(l));
    dw.noalias() = delta * acts[l].transpose();
    grads.params.segment(params.bias_offset(l), params.rows(l)) =
        delta.rowwise().sum();
    Matrix upstream = params.weight(l).transpose() * delta;
    if (l > 0) {
      // tanh'(z) = 1 - tanh(z)^2
      upstream.array() *= (Scalar(1) - acts[l].array().square());
    }
    delta.swap(upstream);
  }
  grads.input = std::move(delta);
  return grads;
}

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases; the last
// layer's weights are additionally multiplied by `final_layer_scale`.
template <typename Scalar>
MlpParams<Scalar> init_mlp(const MlpSpec& spec, Rng& rng,
                           Scalar final_layer_scale = Scalar(1)) {
  MlpParams<Scalar> params(spec);
  for (Eigen::Index l = 0; l < params.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(params.cols(l)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = params.weight(l);
    const Scalar scale =
        l == params.num_layers() - 1 ? final_layer_scale : Scalar(1);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = scale * static_cast<Scalar>(dist(rng));
  }
  return params;
}

}  // namespace nlimb
