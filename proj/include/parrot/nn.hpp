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

#pragma once

// Minimal float64 neural-network kernel: the layers needed by the fusion
// models, their reverse-mode gradients, cross-entropy and Adam.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parrot/tensor.hpp"

namespace parrot::nn {

using Rng = std::mt19937_64;

/// One trainable tensor with its gradient and Adam moment buffers.
struct Parameter {
  std::string name;
  Tensor2 value;
  Tensor2 grad;
  Tensor2 m;
  Tensor2 v;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Ordered collection of parameters. Declaration order is the checkpoint order.
class ParamSet {
 public:
  using Id = std::size_t;

  Id add(std::string name, std::size_t rows, std::size_t cols);

  Parameter& operator[](Id id) { return params_.at(id); }
  const Parameter& operator[](Id id) const { return params_.at(id); }

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const noexcept;
  std::int64_t step() const noexcept { return step_; }

  void zero_grad();

  /// Copies of every parameter value, for best-epoch restore.
  std::vector<Tensor2> snapshot() const;
  void restore(const std::vector<Tensor2>& values);

  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

 private:
  friend void adam_step(ParamSet& params, const AdamConfig& config);

  std::vector<Parameter> params_;
  std::int64_t step_ = 0;
};

/// Bias-corrected Adam update of every parameter, then zeroes the gradients.
void adam_step(ParamSet& params, const AdamConfig& config = {});

/// Glorot-uniform fill: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor2& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// ---------------------------------------------------------------------------
// 1D signals

/// A batch of multi-channel 1D signals. `values` is channels x (batch * length);
/// sample b occupies columns [b * length, (b + 1) * length).
struct SignalBatch {
  Tensor2 values;
  std::size_t batch = 0;
  std::size_t length = 0;

  std::size_t channels() const noexcept { return values.rows(); }
};

/// Treats each row of a B x D matrix as a 1-channel signal of length D.
SignalBatch signal_from_rows(const Tensor2& rows);

/// Single channels x length signal as a batch of one.
SignalBatch single_signal(const Tensor2& channels_by_length);

/// B x (channels * length), channel-major within a row.
Tensor2 flatten(const SignalBatch& x);
SignalBatch unflatten(const Tensor2& flat, std::size_t channels, std::size_t length);

/// Valid cross-correlation. `weight` is out x (in * kernel) with entry
/// [o][c * kernel + j]; `bias` is 1 x out. ReLU is not applied.
SignalBatch conv1d_forward(const SignalBatch& input, const Tensor2& weight, const Tensor2& bias,
                           std::size_t kernel_size);

/// Single-sample convenience: channels x length in, out_channels x (length - k + 1) out.
Tensor2 conv1d_forward(const Tensor2& input, const Tensor2& weight, const Tensor2& bias,
                       std::size_t kernel_size);

struct PoolResult {
  SignalBatch output;
  /// Column index into the input for every output element (same layout as output).
  std::vector<std::size_t> argmax;
};

/// Window 2, stride 2, trailing odd element dropped, first index wins ties.
PoolResult maxpool1d(const SignalBatch& input);
SignalBatch maxpool1d_backward(const SignalBatch& grad_out, std::span<const std::size_t> argmax,
                               std::size_t input_length);

Tensor2 relu(const Tensor2& x);
/// Gradient through ReLU given the forward output.
Tensor2 relu_backward(const Tensor2& grad_out, const Tensor2& activated);

/// out = x * W + b, W is d_in x d_out, b is 1 x d_out.
Tensor2 dense_forward(const Tensor2& x, const Tensor2& weight, const Tensor2& bias);

/// Inverted dropout. With `mask` non-null the per-element multipliers are written there.
Tensor2 dropout(const Tensor2& x, double rate, Rng& rng, bool training, Tensor2* mask = nullptr);

struct CrossEntropy {
  double loss = 0.0;
  Tensor2 probs;
};

/// Row-max stabilized softmax and mean cross-entropy over the batch.
CrossEntropy softmax_xent(const Tensor2& logits, std::span<const int> labels);
/// d(mean loss)/d(logits) = (probs - onehot) / B.
Tensor2 softmax_xent_backward(const Tensor2& probs, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Layers with recorded forward state

class Conv1D {
 public:
  Conv1D() = default;
  Conv1D(ParamSet& params, std::string_view name, std::size_t in_channels,
         std::size_t out_channels, std::size_t kernel_size = 3);

  std::size_t in_channels() const noexcept { return in_channels_; }
  std::size_t out_channels() const noexcept { return out_channels_; }
  std::size_t kernel_size() const noexcept { return kernel_size_; }
  std::size_t output_length(std::size_t input_length) const;
  std::size_t parameter_count() const noexcept;

  void init(ParamSet& params, Rng& rng) const;
  SignalBatch forward(const ParamSet& params, const SignalBatch& input);
  SignalBatch backward(ParamSet& params, const SignalBatch& grad_out);

  ParamSet::Id weight_id() const noexcept { return weight_; }
  ParamSet::Id bias_id() const noexcept { return bias_; }

 private:
  std::size_t in_channels_ = 0;
  std::size_t out_channels_ = 0;
  std::size_t kernel_size_ = 0;
  ParamSet::Id weight_ = 0;
  ParamSet::Id bias_ = 0;
  Tensor2 columns_;  // im2col of the last input
  std::size_t batch_ = 0;
  std::size_t input_length_ = 0;
  bool recorded_ = false;
};

class MaxPool1D {
 public:
  SignalBatch forward(const SignalBatch& input);
  SignalBatch backward(const SignalBatch& grad_out);

 private:
  std::vector<std::size_t> argmax_;
  std::size_t input_length_ = 0;
  bool recorded_ = false;
};

class Dense {
 public:
  Dense() = default;
  Dense(ParamSet& params, std::string_view name, std::size_t in_features,
        std::size_t out_features);

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  std::size_t parameter_count() const noexcept { return in_ * out_ + out_; }

  void init(ParamSet& params, Rng& rng) const;
  Tensor2 forward(const ParamSet& params, const Tensor2& input);
  Tensor2 backward(ParamSet& params, const Tensor2& grad_out);

  ParamSet::Id weight_id() const noexcept { return weight_; }
  ParamSet::Id bias_id() const noexcept { return bias_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  ParamSet::Id weight_ = 0;
  ParamSet::Id bias_ = 0;
  Tensor2 input_;
  bool recorded_ = false;
};

class Dropout {
 public:
  explicit Dropout(double rate = 0.0);

  double rate() const noexcept { return rate_; }
  Tensor2 forward(const Tensor2& input, Rng& rng, bool training);
  Tensor2 backward(const Tensor2& grad_out) const;

 private:
  double rate_ = 0.0;
  Tensor2 mask_;
  bool active_ = false;
  bool recorded_ = false;
};

}  // namespace parrot::nn
