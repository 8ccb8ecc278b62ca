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

// Two-branch fusion classifiers over pooled PTM embeddings.
//
// Each branch encodes a B x D embedding matrix into a B x 120 latent:
//
//   conv(1->64, k3) -> ReLU -> maxpool -> conv(64->128, k3) -> ReLU -> maxpool
//   -> flatten -> dense(->120) -> dropout
//
// The PARROT head consumes [G*Rp | Rq | G^T*Rq | Rp | Rp (.) Rq] (600 wide),
// where G is the Sinkhorn plan between the two latent batches; the
// concatenation baseline consumes [Rp | Rq] (240 wide).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parrot/nn.hpp"
#include "parrot/ot.hpp"
#include "parrot/tensor.hpp"

namespace parrot::fusion {

inline constexpr std::size_t kConv1Filters = 64;
inline constexpr std::size_t kConv2Filters = 128;
inline constexpr std::size_t kKernelSize = 3;
inline constexpr std::size_t kLatentDim = 120;
inline constexpr std::size_t kHeadHidden = 128;

enum class FusionKind : std::uint32_t {
  parrot = 0,
  concat = 1,
  single_p = 2,  // first encoder only (ablation)
  single_q = 3,  // second encoder only (ablation)
};

const char* to_string(FusionKind kind);
/// Accepts "parrot", "concat", "single-a", "single-b".
std::optional<FusionKind> parse_fusion_kind(std::string_view text);

/// Width of the head input for a fusion kind.
std::size_t fused_width(FusionKind kind);

struct ModelConfig {
  FusionKind kind = FusionKind::parrot;
  std::size_t dim_p = 0;
  std::size_t dim_q = 0;
  std::size_t classes = 0;
  double dropout = 0.2;
  ot::SinkhornConfig sinkhorn;
  std::uint64_t seed = 0;
};

/// Activation lengths through one encoder under valid padding and floor pooling.
struct EncoderShape {
  std::size_t conv1 = 0;
  std::size_t pool1 = 0;
  std::size_t conv2 = 0;
  std::size_t pool2 = 0;
  std::size_t flat = 0;
};

/// Throws ShapeError when `input_dim` cannot pass both conv+pool stages.
EncoderShape encoder_shape(std::size_t input_dim);
std::size_t encoder_parameter_count(std::size_t input_dim);
/// Trainable scalars of the model described by `config`, by shape arithmetic.
std::size_t parameter_count(const ModelConfig& config);

class BranchEncoder {
 public:
  BranchEncoder() = default;
  BranchEncoder(nn::ParamSet& params, std::string_view name, std::size_t input_dim,
                double dropout);

  std::size_t input_dim() const noexcept { return input_dim_; }
  const EncoderShape& shape() const noexcept { return shape_; }

  void init(nn::ParamSet& params, nn::Rng& rng) const;

  /// Recording forward pass (B x D -> B x 120).
  Tensor2 forward(const nn::ParamSet& params, const Tensor2& x, nn::Rng& rng, bool training);
  void backward(nn::ParamSet& params, const Tensor2& grad_latent);

  /// Stateless inference pass; dropout disabled.
  Tensor2 encode(const nn::ParamSet& params, const Tensor2& x) const;

 private:
  std::size_t input_dim_ = 0;
  EncoderShape shape_;
  nn::Conv1D conv1_;
  nn::Conv1D conv2_;
  nn::MaxPool1D pool1_;
  nn::MaxPool1D pool2_;
  nn::Dense proj_;
  nn::Dropout drop_;
  Tensor2 act1_;
  Tensor2 act2_;
};

Tensor2 hadamard_fuse(const Tensor2& rp, const Tensor2& rq);

struct OtFusion {
  Tensor2 fused;  // [G*Rp | Rq | G^T*Rq | Rp]
  ot::TransportPlan plan;
};

/// Cost matrix, Sinkhorn, transport and concatenation. With `frozen_plan`
/// set, that plan is used instead of solving.
OtFusion ot_fuse(const Tensor2& rp, const Tensor2& rq, const ot::SinkhornConfig& config,
                 const Tensor2* frozen_plan = nullptr);

struct ForwardOptions {
  bool training = false;
  /// Replaces the Sinkhorn solve (used to hold the plan fixed in gradient checks).
  const Tensor2* frozen_plan = nullptr;
};

struct ForwardOutput {
  Tensor2 logits;       // B x K
  Tensor2 penultimate;  // B x 128, after ReLU
  Tensor2 plan;         // B x B for parrot, empty otherwise
};

class FusionModel {
 public:
  /// Builds and Glorot-initializes every layer from `config.seed`.
  explicit FusionModel(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }
  std::size_t fused_width() const noexcept { return fused_width_; }

  ForwardOutput forward(const Tensor2& xp, const Tensor2& xq, const ForwardOptions& options = {});
  /// Accumulates parameter gradients for d(loss)/d(logits) of the last forward.
  void backward(const Tensor2& grad_logits);

  /// Stateless inference; safe to call concurrently on a shared model.
  ForwardOutput infer(const Tensor2& xp, const Tensor2& xq) const;

 private:
  bool uses_p() const noexcept { return config_.kind != FusionKind::single_q; }
  bool uses_q() const noexcept { return config_.kind != FusionKind::single_p; }
  void check_inputs(const Tensor2& xp, const Tensor2& xq) const;
  Tensor2 fuse(const Tensor2& rp, const Tensor2& rq, const Tensor2* frozen_plan,
               Tensor2* plan_out) const;

  ModelConfig config_;
  nn::ParamSet params_;
  BranchEncoder encoder_p_;
  BranchEncoder encoder_q_;
  nn::Dense hidden_;
  nn::Dropout head_drop_;
  nn::Dense output_;
  nn::Rng dropout_rng_;
  std::size_t fused_width_ = 0;

  // Recorded state of the last forward pass.
  Tensor2 rp_;
  Tensor2 rq_;
  Tensor2 plan_;
  Tensor2 hidden_act_;
  bool recorded_ = false;
};

// ---------------------------------------------------------------------------
// Checkpoints (layout in docs/checkpoint.md)

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor2 value;
};

struct Checkpoint {
  ModelConfig config;
  std::vector<std::string> class_names;
  std::string ptm_p;
  std::string ptm_q;
  std::vector<NamedTensor> params;
};

void save_checkpoint(const std::filesystem::path& path, const FusionModel& model,
                     const std::vector<std::string>& class_names, const std::string& ptm_p,
                     const std::string& ptm_q);

/// Throws FormatError on bad magic, version, truncation or architecture mismatch.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Rebuilds a model from a checkpoint's config and parameter values.
FusionModel model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace parrot::fusion
