// Copyright 2026 The parrot-fusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "parrot/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parrot/errors.hpp"

namespace parrot::nn {
namespace {

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_shape(const Tensor2& a, const Tensor2& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": " + dims(a.rows(), a.cols()) + " vs " +
                     dims(b.rows(), b.cols()));
  }
}

Tensor2 im2col(const SignalBatch& x, std::size_t kernel, std::size_t out_len) {
  const std::size_t channels = x.channels();
  Tensor2 cols(channels * kernel, x.batch * out_len);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto src = x.values.row(c);
    for (std::size_t j = 0; j < kernel; ++j) {
      double* dst = cols.row(c * kernel + j).data();
      for (std::size_t b = 0; b < x.batch; ++b) {
        const double* s = src.data() + b * x.length + j;
        std::copy(s, s + out_len, dst + b * out_len);
      }
    }
  }
  return cols;
}

SignalBatch col2im(const Tensor2& cols, std::size_t channels, std::size_t kernel,
                   std::size_t batch, std::size_t length) {
  const std::size_t out_len = length - kernel + 1;
  SignalBatch x{Tensor2(channels, batch * length), batch, length};
  for (std::size_t c = 0; c < channels; ++c) {
    double* dst = x.values.row(c).data();
    for (std::size_t j = 0; j < kernel; ++j) {
      const double* src = cols.row(c * kernel + j).data();
      for (std::size_t b = 0; b < batch; ++b) {
        double* d = dst + b * length + j;
        const double* s = src + b * out_len;
        for (std::size_t t = 0; t < out_len; ++t) d[t] += s[t];
      }
    }
  }
  return x;
}

std::size_t valid_length(std::size_t length, std::size_t kernel) {
  if (kernel == 0) throw ShapeError("kernel size must be >= 1");
  if (length < kernel) {
    throw ShapeError("conv1d input length " + std::to_string(length) + " < kernel size " +
                     std::to_string(kernel));
  }
  return length - kernel + 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamSet / Adam

ParamSet::Id ParamSet::add(std::string name, std::size_t rows, std::size_t cols) {
  params_.push_back(Parameter{std::move(name), Tensor2(rows, cols), Tensor2(rows, cols),
                              Tensor2(rows, cols), Tensor2(rows, cols)});
  return params_.size() - 1;
}

std::size_t ParamSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::vector<Tensor2> ParamSet::snapshot() const {
  std::vector<Tensor2> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParamSet::restore(const std::vector<Tensor2>& values) {
  if (values.size() != params_.size()) throw ShapeError("snapshot parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require_same_shape(params_[i].value, values[i], "snapshot restore of " + params_[i].name);
    params_[i].value = values[i];
  }
}

void adam_step(ParamSet& params, const AdamConfig& config) {
  ++params.step_;
  const double t = static_cast<double>(params.step_);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (auto& p : params.params_) {
    double* value = p.value.data();
    double* grad = p.grad.data();
    double* m = p.m.data();
    double* v = p.v.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = grad[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
      grad[i] = 0.0;
    }
  }
}

void glorot_uniform(Tensor2& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values()) v = dist(rng);
}

// ---------------------------------------------------------------------------
// Signals

SignalBatch signal_from_rows(const Tensor2& rows) {
  return SignalBatch{Tensor2(1, rows.size(), std::vector<double>(rows.values().begin(),
                                                                  rows.values().end())),
                     rows.rows(), rows.cols()};
}

SignalBatch single_signal(const Tensor2& channels_by_length) {
  return SignalBatch{channels_by_length, 1, channels_by_length.cols()};
}

Tensor2 flatten(const SignalBatch& x) {
  const std::size_t channels = x.channels();
  Tensor2 out(x.batch, channels * x.length);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = x.values.row(c).data();
    for (std::size_t b = 0; b < x.batch; ++b) {
      std::copy(src + b * x.length, src + (b + 1) * x.length,
                out.row(b).data() + c * x.length);
    }
  }
  return out;
}

SignalBatch unflatten(const Tensor2& flat, std::size_t channels, std::size_t length) {
  if (flat.cols() != channels * length) throw ShapeError("unflatten width mismatch");
  SignalBatch x{Tensor2(channels, flat.rows() * length), flat.rows(), length};
  for (std::size_t c = 0; c < channels; ++c) {
    double* dst = x.values.row(c).data();
    for (std::size_t b = 0; b < flat.rows(); ++b) {
      const double* src = flat.row(b).data() + c * length;
      std::copy(src, src + length, dst + b * length);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Conv / pool / dense / activations

SignalBatch conv1d_forward(const SignalBatch& input, const Tensor2& weight, const Tensor2& bias,
                           std::size_t kernel_size) {
  const std::size_t out_len = valid_length(input.length, kernel_size);
  if (weight.cols() != input.channels() * kernel_size) {
    throw ShapeError("conv1d weight expects " + std::to_string(weight.cols() / kernel_size) +
                     " input channels, got " + std::to_string(input.channels()));
  }
  if (bias.size() != weight.rows()) throw ShapeError("conv1d bias length mismatch");
  const Tensor2 cols = im2col(input, kernel_size, out_len);
  SignalBatch out{matmul(weight, cols), input.batch, out_len};
  for (std::size_t o = 0; o < out.values.rows(); ++o) {
    const double b = bias.data()[o];
    for (double& v : out.values.row(o)) v += b;
  }
  out.values.require_finite("conv1d");
  return out;
}

Tensor2 conv1d_forward(const Tensor2& input, const Tensor2& weight, const Tensor2& bias,
                       std::size_t kernel_size) {
  return conv1d_forward(single_signal(input), weight, bias, kernel_size).values;
}

PoolResult maxpool1d(const SignalBatch& input) {
  constexpr std::size_t window = 2;
  if (input.length < window) {
    throw ShapeError("maxpool input length " + std::to_string(input.length) + " < window 2");
  }
  const std::size_t out_len = input.length / window;
  PoolResult result{SignalBatch{Tensor2(input.channels(), input.batch * out_len), input.batch,
                                out_len},
                    std::vector<std::size_t>(input.channels() * input.batch * out_len)};
  std::size_t k = 0;
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const double* src = input.values.row(c).data();
    double* dst = result.output.values.row(c).data();
    for (std::size_t b = 0; b < input.batch; ++b) {
      for (std::size_t t = 0; t < out_len; ++t, ++k) {
        const std::size_t first = b * input.length + window * t;
        const std::size_t pick = src[first + 1] > src[first] ? first + 1 : first;
        dst[b * out_len + t] = src[pick];
        result.argmax[k] = pick;
      }
    }
  }
  return result;
}

SignalBatch maxpool1d_backward(const SignalBatch& grad_out, std::span<const std::size_t> argmax,
                               std::size_t input_length) {
  if (argmax.size() != grad_out.values.size()) throw ShapeError("maxpool argmax size mismatch");
  SignalBatch grad_in{Tensor2(grad_out.channels(), grad_out.batch * input_length), grad_out.batch,
                      input_length};
  std::size_t k = 0;
  for (std::size_t c = 0; c < grad_out.channels(); ++c) {
    const auto g = grad_out.values.row(c);
    auto dst = grad_in.values.row(c);
    for (double v : g) dst[argmax[k++]] += v;
  }
  return grad_in;
}

Tensor2 relu(const Tensor2& x) {
  Tensor2 out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor2 relu_backward(const Tensor2& grad_out, const Tensor2& activated) {
  require_same_shape(grad_out, activated, "relu backward");
  Tensor2 out = grad_out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(activated.data()[i] > 0.0)) out.data()[i] = 0.0;
  }
  return out;
}

Tensor2 dense_forward(const Tensor2& x, const Tensor2& weight, const Tensor2& bias) {
  if (x.cols() != weight.rows()) {
    throw ShapeError("dense input width " + std::to_string(x.cols()) + " != weight rows " +
                     std::to_string(weight.rows()));
  }
  if (bias.size() != weight.cols()) throw ShapeError("dense bias length mismatch");
  Tensor2 out(x.rows(), weight.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    std::copy(bias.values().begin(), bias.values().end(), out.row(r).begin());
  }
  matmul_accumulate(x, weight, out);
  out.require_finite("dense");
  return out;
}

Tensor2 dropout(const Tensor2& x, double rate, Rng& rng, bool training, Tensor2* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) {
    if (mask != nullptr) *mask = Tensor2(x.rows(), x.cols(), 1.0);
    return x;
  }
  const double scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Tensor2 multipliers(x.rows(), x.cols());
  for (double& m : multipliers.values()) m = uniform(rng) < rate ? 0.0 : scale;
  Tensor2 out = hadamard(x, multipliers);
  if (mask != nullptr) *mask = std::move(multipliers);
  return out;
}

CrossEntropy softmax_xent(const Tensor2& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("label count " + std::to_string(labels.size()) + " != batch size " +
                     std::to_string(logits.rows()));
  }
  if (logits.rows() == 0) throw ShapeError("empty batch");
  const auto classes = static_cast<int>(logits.cols());
  CrossEntropy result{0.0, Tensor2(logits.rows(), logits.cols())};
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int label = labels[r];
    if (label < 0 || label >= classes) {
      throw ParameterError("label " + std::to_string(label) + " outside [0, " +
                           std::to_string(classes) + ")");
    }
    const auto z = logits.row(r);
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    auto p = result.probs.row(r);
    for (std::size_t c = 0; c < z.size(); ++c) {
      p[c] = std::exp(z[c] - peak);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
    result.loss -= z[static_cast<std::size_t>(label)] - peak - std::log(sum);
  }
  result.loss /= static_cast<double>(logits.rows());
  if (!std::isfinite(result.loss)) throw NumericError("non-finite cross-entropy");
  return result;
}

Tensor2 softmax_xent_backward(const Tensor2& probs, std::span<const int> labels) {
  if (labels.size() != probs.rows()) throw ShapeError("label count mismatch");
  Tensor2 grad = probs;
  const double inv_batch = 1.0 / static_cast<double>(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    grad(r, static_cast<std::size_t>(labels[r])) -= 1.0;
    for (double& v : grad.row(r)) v *= inv_batch;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Layers

Conv1D::Conv1D(ParamSet& params, std::string_view name, std::size_t in_channels,
               std::size_t out_channels, std::size_t kernel_size)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_size_(kernel_size) {
  if (kernel_size == 0 || in_channels == 0 || out_channels == 0) {
    throw ShapeError("conv1d layer dimensions must be positive");
  }
  weight_ = params.add(std::string(name) + ".weight", out_channels, in_channels * kernel_size);
  bias_ = params.add(std::string(name) + ".bias", 1, out_channels);
}

std::size_t Conv1D::output_length(std::size_t input_length) const {
  return valid_length(input_length, kernel_size_);
}

std::size_t Conv1D::parameter_count() const noexcept {
  return out_channels_ * in_channels_ * kernel_size_ + out_channels_;
}

void Conv1D::init(ParamSet& params, Rng& rng) const {
  glorot_uniform(params[weight_].value, in_channels_ * kernel_size_,
                 out_channels_ * kernel_size_, rng);
  params[bias_].value.fill(0.0);
}

SignalBatch Conv1D::forward(const ParamSet& params, const SignalBatch& input) {
  const std::size_t out_len = output_length(input.length);
  if (input.channels() != in_channels_) throw ShapeError("conv1d channel mismatch");
  columns_ = im2col(input, kernel_size_, out_len);
  batch_ = input.batch;
  input_length_ = input.length;
  SignalBatch out{matmul(params[weight_].value, columns_), input.batch, out_len};
  const Tensor2& bias = params[bias_].value;
  for (std::size_t o = 0; o < out_channels_; ++o) {
    const double b = bias.data()[o];
    for (double& v : out.values.row(o)) v += b;
  }
  out.values.require_finite("conv1d");
  recorded_ = true;
  return out;
}

SignalBatch Conv1D::backward(ParamSet& params, const SignalBatch& grad_out) {
  if (!recorded_) throw StateError("conv1d backward called before forward");
  recorded_ = false;
  matmul_accumulate(grad_out.values, columns_, params[weight_].grad, false, true);
  Tensor2& bias_grad = params[bias_].grad;
  for (std::size_t o = 0; o < out_channels_; ++o) {
    double s = 0.0;
    for (double v : grad_out.values.row(o)) s += v;
    bias_grad.data()[o] += s;
  }
  const Tensor2 grad_cols = matmul(params[weight_].value, grad_out.values, true, false);
  return col2im(grad_cols, in_channels_, kernel_size_, batch_, input_length_);
}

SignalBatch MaxPool1D::forward(const SignalBatch& input) {
  PoolResult r = maxpool1d(input);
  argmax_ = std::move(r.argmax);
  input_length_ = input.length;
  recorded_ = true;
  return std::move(r.output);
}

SignalBatch MaxPool1D::backward(const SignalBatch& grad_out) {
  if (!recorded_) throw StateError("maxpool backward called before forward");
  recorded_ = false;
  return maxpool1d_backward(grad_out, argmax_, input_length_);
}

Dense::Dense(ParamSet& params, std::string_view name, std::size_t in_features,
             std::size_t out_features)
    : in_(in_features), out_(out_features) {
  if (in_features == 0 || out_features == 0) throw ShapeError("dense dimensions must be positive");
  weight_ = params.add(std::string(name) + ".weight", in_features, out_features);
  bias_ = params.add(std::string(name) + ".bias", 1, out_features);
}

void Dense::init(ParamSet& params, Rng& rng) const {
  glorot_uniform(params[weight_].value, in_, out_, rng);
  params[bias_].value.fill(0.0);
}

Tensor2 Dense::forward(const ParamSet& params, const Tensor2& input) {
  Tensor2 out = dense_forward(input, params[weight_].value, params[bias_].value);
  input_ = input;
  recorded_ = true;
  return out;
}

Tensor2 Dense::backward(ParamSet& params, const Tensor2& grad_out) {
  if (!recorded_) throw StateError("dense backward called before forward");
  recorded_ = false;
  matmul_accumulate(input_, grad_out, params[weight_].grad, true, false);
  Tensor2& bias_grad = params[bias_].grad;
  for (std::size_t r = 0; r < grad_out.rows(); ++r) {
    const auto g = grad_out.row(r);
    for (std::size_t c = 0; c < out_; ++c) bias_grad.data()[c] += g[c];
  }
  return matmul(grad_out, params[weight_].value, false, true);
}

Dropout::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
}

Tensor2 Dropout::forward(const Tensor2& input, Rng& rng, bool training) {
  active_ = training && rate_ > 0.0;
  recorded_ = true;
  if (!active_) return input;
  return dropout(input, rate_, rng, true, &mask_);
}

Tensor2 Dropout::backward(const Tensor2& grad_out) const {
  if (!recorded_) throw StateError("dropout backward called before forward");
  if (!active_) return grad_out;
  return hadamard(grad_out, mask_);
}

}  // namespace parrot::nn
