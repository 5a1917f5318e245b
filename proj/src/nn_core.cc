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

#include "flsim/nn_core.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "flsim/errors.h"

namespace flsim {
namespace {

// Target matrix for the squared-error loss.
Matrix RegressionTargets(const Batch& batch, int output_dim) {
  if (batch.targets.size() > 0) {
    if (batch.targets.rows() != batch.inputs.rows() ||
        batch.targets.cols() != output_dim) {
      throw ConfigError("batch targets have shape incompatible with the model");
    }
    return batch.targets;
  }
  Matrix onehot = Matrix::Zero(batch.inputs.rows(), output_dim);
  for (int i = 0; i < batch.size(); ++i) onehot(i, batch.labels[i]) = 1.0;
  return onehot;
}

void CheckBatch(const ModelSpec& spec, const Batch& batch) {
  if (batch.inputs.rows() < 1) throw ConfigError("batch is empty");
  if (batch.inputs.cols() != spec.input_dim()) {
    std::ostringstream msg;
    msg << "batch input dimension " << batch.inputs.cols()
        << " does not match model input dimension " << spec.input_dim();
    throw ConfigError(msg.str());
  }
  const bool needs_labels =
      spec.is_classifier() || batch.targets.size() == 0;
  if (!needs_labels) return;
  if (static_cast<int>(batch.labels.size()) != batch.size()) {
    throw ConfigError("batch label count does not match its row count");
  }
  for (int label : batch.labels) {
    if (label < 0 || label >= spec.output_dim()) {
      throw ConfigError("batch label out of range for the model output");
    }
  }
}

// Activations of every layer, inputs first. pre[l] holds layer l's pre-activation.
struct ForwardTrace {
  std::vector<Matrix> activations;
  std::vector<Matrix> pre;
};

ForwardTrace RunForward(const ParamVec& params, const Matrix& inputs) {
  const ModelSpec& spec = params.spec();
  ForwardTrace trace;
  trace.activations.reserve(spec.num_layers() + 1);
  trace.pre.reserve(spec.num_layers());
  trace.activations.push_back(inputs);
  for (int l = 0; l < spec.num_layers(); ++l) {
    Matrix z = trace.activations.back() * params.weights(l).transpose();
    z.rowwise() += params.bias(l).transpose();
    const bool hidden = l + 1 < spec.num_layers();
    Matrix a = (hidden && spec.activation == Activation::kRelu)
                   ? Matrix(z.cwiseMax(0.0))
                   : z;
    trace.pre.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
  }
  return trace;
}

}  // namespace

size_t ModelSpec::num_params() const {
  size_t total = 0;
  for (int l = 0; l < num_layers(); ++l) {
    total += static_cast<size_t>(layer_dims[l]) * layer_dims[l + 1] +
             layer_dims[l + 1];
  }
  return total;
}

size_t ModelSpec::weight_offset(int l) const {
  size_t offset = 0;
  for (int j = 0; j < l; ++j) {
    offset += static_cast<size_t>(layer_dims[j]) * layer_dims[j + 1] +
              layer_dims[j + 1];
  }
  return offset;
}

size_t ModelSpec::bias_offset(int l) const {
  return weight_offset(l) +
         static_cast<size_t>(layer_dims[l]) * layer_dims[l + 1];
}

void ModelSpec::Validate() const {
  if (layer_dims.size() < 2) {
    throw ConfigError("model layer_dims needs at least an input and an output");
  }
  for (int d : layer_dims) {
    if (d < 1) throw ConfigError("model layer_dims entries must be >= 1");
  }
  if (loss == LossKind::kMeanSquaredError &&
      activation != Activation::kIdentity) {
    throw ConfigError(
        "mean_squared_error loss requires the identity activation");
  }
  if (loss == LossKind::kSoftmaxCrossEntropy && output_dim() < 2) {
    throw ConfigError("softmax_cross_entropy needs at least two classes");
  }
}

ModelSpecPtr MakeModelSpec(std::vector<int> layer_dims, Activation activation,
                           LossKind loss) {
  auto spec = std::make_shared<ModelSpec>();
  spec->layer_dims = std::move(layer_dims);
  spec->activation = activation;
  spec->loss = loss;
  spec->Validate();
  return spec;
}

ParamVec::ParamVec(ModelSpecPtr spec, Vector values)
    : spec_(std::move(spec)), values_(std::move(values)) {
  if (!spec_) throw InternalError("ParamVec requires a model spec");
  if (static_cast<size_t>(values_.size()) != spec_->num_params()) {
    throw InternalError("ParamVec length does not match its model spec");
  }
}

ParamVec ParamVec::Zeros(ModelSpecPtr spec) {
  const auto n = static_cast<Eigen::Index>(spec->num_params());
  return ParamVec(std::move(spec), Vector::Zero(n));
}

ParamVec ParamVec::Constant(ModelSpecPtr spec, double value) {
  const auto n = static_cast<Eigen::Index>(spec->num_params());
  return ParamVec(std::move(spec), Vector::Constant(n, value));
}

Eigen::Map<const RowMajorMatrix> ParamVec::weights(int layer) const {
  return Eigen::Map<const RowMajorMatrix>(
      values_.data() + spec_->weight_offset(layer),
      spec_->layer_dims[layer + 1], spec_->layer_dims[layer]);
}

Eigen::Map<const Vector> ParamVec::bias(int layer) const {
  return Eigen::Map<const Vector>(values_.data() + spec_->bias_offset(layer),
                                  spec_->layer_dims[layer + 1]);
}

bool ParamVec::SameLayout(const ParamVec& other) const {
  if (!spec_ || !other.spec_) return spec_ == other.spec_;
  return spec_ == other.spec_ || *spec_ == *other.spec_;
}

void ParamVec::CheckLayout(const ParamVec& other) const {
  if (!SameLayout(other)) {
    throw InternalError("parameter vectors have different layouts");
  }
}

double ParamVec::Dot(const ParamVec& other) const {
  CheckLayout(other);
  return values_.dot(other.values_);
}

ParamVec& ParamVec::Axpy(double a, const ParamVec& x) {
  CheckLayout(x);
  values_ += a * x.values_;
  return *this;
}

ParamVec& ParamVec::operator+=(const ParamVec& other) {
  CheckLayout(other);
  values_ += other.values_;
  return *this;
}

ParamVec& ParamVec::operator-=(const ParamVec& other) {
  CheckLayout(other);
  values_ -= other.values_;
  return *this;
}

ParamVec& ParamVec::operator*=(double a) {
  values_ *= a;
  return *this;
}

bool operator==(const ParamVec& a, const ParamVec& b) {
  return a.SameLayout(b) && a.values_ == b.values_;
}

ParamVec InitParams(const ModelSpecPtr& spec, RngStream& rng) {
  ParamVec params = ParamVec::Zeros(spec);
  for (int l = 0; l < spec->num_layers(); ++l) {
    const int fan_in = spec->layer_dims[l];
    const int fan_out = spec->layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    const size_t begin = spec->weight_offset(l);
    const size_t end = spec->bias_offset(l);
    for (size_t i = begin; i < end; ++i) params[i] = rng.Uniform(-bound, bound);
  }
  return params;
}

Matrix Forward(const ParamVec& params, const Matrix& inputs) {
  if (inputs.cols() != params.spec().input_dim()) {
    throw ConfigError("input dimension does not match the model");
  }
  return RunForward(params, inputs).activations.back();
}

Matrix Softmax(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    probs.row(i) = (logits.row(i).array() - shift).exp().matrix();
    probs.row(i) /= probs.row(i).sum();
  }
  return probs;
}

LossAndGradient LossAndGrad(const ParamVec& params, const Batch& batch) {
  const ModelSpec& spec = params.spec();
  CheckBatch(spec, batch);
  const ForwardTrace trace = RunForward(params, batch.inputs);
  const Matrix& out = trace.activations.back();
  const double inv_b = 1.0 / batch.size();

  LossAndGradient result;
  Matrix dz;
  if (spec.is_classifier()) {
    double total = 0.0;
    dz = Softmax(out);
    for (int i = 0; i < batch.size(); ++i) {
      const int y = batch.labels[i];
      const double shift = out.row(i).maxCoeff();
      const double lse =
          shift + std::log((out.row(i).array() - shift).exp().sum());
      total += lse - out(i, y);
      dz(i, y) -= 1.0;
    }
    result.loss = total * inv_b;
  } else {
    dz = out - RegressionTargets(batch, spec.output_dim());
    result.loss = 0.5 * dz.squaredNorm() * inv_b;
  }
  dz *= inv_b;

  result.grad = ParamVec::Zeros(params.spec_ptr());
  Vector& g = result.grad.mutable_values();
  for (int l = spec.num_layers() - 1; l >= 0; --l) {
    const int rows = spec.layer_dims[l + 1];
    const int cols = spec.layer_dims[l];
    Eigen::Map<RowMajorMatrix>(g.data() + spec.weight_offset(l), rows, cols) =
        dz.transpose() * trace.activations[l];
    Eigen::Map<Vector>(g.data() + spec.bias_offset(l), rows) =
        dz.colwise().sum().transpose();
    if (l == 0) break;
    Matrix da = dz * params.weights(l);
    if (spec.activation == Activation::kRelu) {
      da = da.cwiseProduct(
          (trace.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    dz = std::move(da);
  }
  return result;
}

Prediction Predict(const ParamVec& params, const Matrix& inputs) {
  if (!params.spec().is_classifier()) {
    throw UnsupportedOperationError(
        "predict requires a classification model");
  }
  Prediction prediction;
  prediction.probabilities = Softmax(Forward(params, inputs));
  prediction.labels.resize(inputs.rows());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    // maxCoeff reports the first maximal index.
    Eigen::Index best = 0;
    prediction.probabilities.row(i).maxCoeff(&best);
    prediction.labels[i] = static_cast<int>(best);
  }
  return prediction;
}

Prediction Predict(const ParamVec& params, const Batch& batch) {
  return Predict(params, batch.inputs);
}

ParamVec SgdStep(const ParamVec& params, const ParamVec& grad, double eta) {
  if (!(eta > 0.0)) throw ConfigError("learning rate eta must be positive");
  ParamVec next = params;
  next.Axpy(-eta, grad);
  return next;
}

ParamVec Hvp(const ParamVec& params, const Batch& batch, const ParamVec& v,
             const HvpMethod& method) {
  if (!params.SameLayout(v)) {
    throw InternalError("hvp direction has a different layout");
  }
  const double v_norm = v.Norm();
  if (v_norm == 0.0) return ParamVec::Zeros(params.spec_ptr());

  if (std::holds_alternative<AnalyticQuadraticHvp>(method)) {
    const ModelSpec& spec = params.spec();
    if (spec.loss != LossKind::kMeanSquaredError ||
        spec.activation != Activation::kIdentity || spec.num_layers() != 1) {
      throw UnsupportedOperationError(
          "analytic Hessian product requires a single-layer identity model "
          "with squared-error loss");
    }
    CheckBatch(spec, batch);
    const Matrix& x = batch.inputs;
    // Per-output responses of the augmented design [X, 1] to v.
    Matrix r = x * v.weights(0).transpose();
    r.rowwise() += v.bias(0).transpose();
    const double inv_b = 1.0 / batch.size();
    ParamVec out = ParamVec::Zeros(params.spec_ptr());
    Vector& h = out.mutable_values();
    Eigen::Map<RowMajorMatrix>(h.data() + spec.weight_offset(0),
                               spec.output_dim(), spec.input_dim()) =
        inv_b * (r.transpose() * x);
    Eigen::Map<Vector>(h.data() + spec.bias_offset(0), spec.output_dim()) =
        inv_b * r.colwise().sum().transpose();
    return out;
  }

  const auto& fd = std::get<FiniteDiffHvp>(method);
  const double eps =
      fd.eps.value_or(1e-4 * (1.0 + params.values().cwiseAbs().maxCoeff()));
  ParamVec direction = (1.0 / v_norm) * v;
  ParamVec plus = params;
  plus.Axpy(eps, direction);
  ParamVec minus = params;
  minus.Axpy(-eps, direction);
  ParamVec diff = LossAndGrad(plus, batch).grad;
  diff -= LossAndGrad(minus, batch).grad;
  diff *= v_norm / (2.0 * eps);
  return diff;
}

ParamVec LaplaceNoise(const ModelSpecPtr& spec, double std_dev,
                      RngStream& rng) {
  if (!(std_dev >= 0.0)) {
    throw ConfigError("Laplace noise std must be non-negative");
  }
  ParamVec noise = ParamVec::Zeros(spec);
  if (std_dev == 0.0) return noise;
  const double scale = LaplaceScaleForStd(std_dev);
  for (size_t i = 0; i < noise.size(); ++i) noise[i] = rng.Laplace(scale);
  return noise;
}

ParamVec ClipToNorm(const ParamVec& v, double c) {
  if (!(c > 0.0)) throw ConfigError("clip norm must be positive");
  const double norm = v.Norm();
  if (norm <= c) return v;
  // Rounding in c / norm can leave the result a few ulps outside the ball.
  double scale = c / norm;
  ParamVec clipped = v;
  clipped *= scale;
  while (clipped.Norm() > c) {
    scale = std::nextafter(scale, 0.0);
    clipped = v;
    clipped *= scale;
  }
  return clipped;
}

}  // namespace flsim
