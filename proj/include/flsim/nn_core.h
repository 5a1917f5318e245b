// Copyright 2026 The flsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FLSIM_NN_CORE_H_
#define FLSIM_NN_CORE_H_

#include <cstddef>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "flsim/rng.h"

namespace flsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { kRelu, kIdentity };
enum class LossKind { kSoftmaxCrossEntropy, kMeanSquaredError };

// Architecture of a fully connected network. The activation applies to hidden
// layers only; the last layer always emits raw scores (logits or regression
// outputs).
struct ModelSpec {
  std::vector<int> layer_dims;
  Activation activation = Activation::kRelu;
  LossKind loss = LossKind::kSoftmaxCrossEntropy;

  int num_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  bool is_classifier() const { return loss == LossKind::kSoftmaxCrossEntropy; }
  // Total parameter count: sum over layers of in*out + out.
  size_t num_params() const;
  // Offset of layer `l`'s weight block; its bias block follows immediately.
  size_t weight_offset(int l) const;
  size_t bias_offset(int l) const;

  // Throws ConfigError on a malformed architecture.
  void Validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

using ModelSpecPtr = std::shared_ptr<const ModelSpec>;

// Validates and freezes a spec so parameter vectors can share it.
ModelSpecPtr MakeModelSpec(std::vector<int> layer_dims, Activation activation,
                           LossKind loss);

// Flat parameter vector. Layout per layer l: the weight matrix of shape
// [dims[l+1] x dims[l]] in row-major order, then the dims[l+1] biases.
class ParamVec {
 public:
  ParamVec() = default;
  ParamVec(ModelSpecPtr spec, Vector values);

  static ParamVec Zeros(ModelSpecPtr spec);
  static ParamVec Constant(ModelSpecPtr spec, double value);

  const ModelSpec& spec() const { return *spec_; }
  const ModelSpecPtr& spec_ptr() const { return spec_; }
  const Vector& values() const { return values_; }
  Vector& mutable_values() { return values_; }
  size_t size() const { return static_cast<size_t>(values_.size()); }
  double operator[](size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  double& operator[](size_t i) { return values_[static_cast<Eigen::Index>(i)]; }

  Eigen::Map<const RowMajorMatrix> weights(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;

  double Norm() const { return values_.norm(); }
  double SquaredNorm() const { return values_.squaredNorm(); }
  double Dot(const ParamVec& other) const;
  bool AllFinite() const { return values_.allFinite(); }
  bool SameLayout(const ParamVec& other) const;

  // this += a * x
  ParamVec& Axpy(double a, const ParamVec& x);
  ParamVec& operator+=(const ParamVec& other);
  ParamVec& operator-=(const ParamVec& other);
  ParamVec& operator*=(double a);

  friend ParamVec operator+(ParamVec a, const ParamVec& b) { return a += b; }
  friend ParamVec operator-(ParamVec a, const ParamVec& b) { return a -= b; }
  friend ParamVec operator*(double a, ParamVec v) { return v *= a; }
  // Exact (bitwise) equality of values on the same layout.
  friend bool operator==(const ParamVec& a, const ParamVec& b);

 private:
  void CheckLayout(const ParamVec& other) const;

  ModelSpecPtr spec_;
  Vector values_;
};

// A mini-batch. Classification losses read `labels`; the squared-error loss
// reads `targets` when it is non-empty and otherwise regresses onto one-hot
// encodings of `labels`.
struct Batch {
  Matrix inputs;  // [batch_size x input_dim]
  std::vector<int> labels;
  Matrix targets;  // [batch_size x output_dim] or empty

  int size() const { return static_cast<int>(inputs.rows()); }
};

struct LossAndGradient {
  double loss = 0.0;
  ParamVec grad;
};

struct Prediction {
  Matrix probabilities;  // row-stochastic [batch_size x classes]
  std::vector<int> labels;
};

// Glorot-uniform weights, zero biases.
ParamVec InitParams(const ModelSpecPtr& spec, RngStream& rng);

// Raw network outputs [batch_size x output_dim].
Matrix Forward(const ParamVec& params, const Matrix& inputs);

// Mean loss over the batch and its exact gradient. Squared error is
// 0.5 * ||output - target||^2 per sample.
LossAndGradient LossAndGrad(const ParamVec& params, const Batch& batch);

// Softmax probabilities and argmax labels (lowest index wins ties). Requires a
// classification spec.
Prediction Predict(const ParamVec& params, const Matrix& inputs);
Prediction Predict(const ParamVec& params, const Batch& batch);

// Row-wise softmax, shifted by the row max.
Matrix Softmax(const Matrix& logits);

// params - eta * grad. eta must be positive.
ParamVec SgdStep(const ParamVec& params, const ParamVec& grad, double eta);

struct FiniteDiffHvp {
  // Defaults to 1e-4 * (1 + max|params|).
  std::optional<double> eps;
};
struct AnalyticQuadraticHvp {};
using HvpMethod = std::variant<FiniteDiffHvp, AnalyticQuadraticHvp>;

// Hessian of the mean batch loss times v. The finite-difference route takes a
// central difference of gradients along v/||v|| and rescales by ||v||. The
// analytic route is only defined for the identity/squared-error model, where
// the Hessian is the (bias-augmented) Gram matrix X^T X / B per output.
ParamVec Hvp(const ParamVec& params, const Batch& batch, const ParamVec& v,
             const HvpMethod& method = FiniteDiffHvp{});

// Scale of a Laplace distribution with the given standard deviation.
inline double LaplaceScaleForStd(double std_dev) {
  return std_dev / 1.4142135623730951;
}

// i.i.d. zero-mean Laplace entries with standard deviation `std_dev`.
ParamVec LaplaceNoise(const ModelSpecPtr& spec, double std_dev,
                      RngStream& rng);

// v rescaled onto the L2 ball of radius c when it lies outside.
ParamVec ClipToNorm(const ParamVec& v, double c);

}  // namespace flsim

#endif  // FLSIM_NN_CORE_H_
