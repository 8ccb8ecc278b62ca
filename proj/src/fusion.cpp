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

#include "parrot/fusion.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <string>

#include "parrot/errors.hpp"
#include "parrot/seed.hpp"

namespace parrot::fusion {

const char* to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::parrot: return "parrot";
    case FusionKind::concat: return "concat";
    case FusionKind::single_p: return "single-a";
    case FusionKind::single_q: return "single-b";
  }
  return "unknown";
}

std::optional<FusionKind> parse_fusion_kind(std::string_view text) {
  for (auto kind : {FusionKind::parrot, FusionKind::concat, FusionKind::single_p,
                    FusionKind::single_q}) {
    if (text == to_string(kind)) return kind;
  }
  return std::nullopt;
}

std::size_t fused_width(FusionKind kind) {
  switch (kind) {
    case FusionKind::parrot: return 5 * kLatentDim;
    case FusionKind::concat: return 2 * kLatentDim;
    case FusionKind::single_p:
    case FusionKind::single_q: return kLatentDim;
  }
  throw ParameterError("unknown fusion kind");
}

EncoderShape encoder_shape(std::size_t input_dim) {
  EncoderShape s;
  const auto fail = [&] {
    throw ShapeError("embedding dimension " + std::to_string(input_dim) +
                     " is too small for two conv+pool stages (need >= 10)");
  };
  if (input_dim < kKernelSize) fail();
  s.conv1 = input_dim - kKernelSize + 1;
  s.pool1 = s.conv1 / 2;
  if (s.pool1 < kKernelSize) fail();
  s.conv2 = s.pool1 - kKernelSize + 1;
  s.pool2 = s.conv2 / 2;
  if (s.pool2 == 0) fail();
  s.flat = kConv2Filters * s.pool2;
  return s;
}

std::size_t encoder_parameter_count(std::size_t input_dim) {
  const EncoderShape s = encoder_shape(input_dim);
  const std::size_t conv1 = kConv1Filters * 1 * kKernelSize + kConv1Filters;
  const std::size_t conv2 = kConv2Filters * kConv1Filters * kKernelSize + kConv2Filters;
  const std::size_t proj = s.flat * kLatentDim + kLatentDim;
  return conv1 + conv2 + proj;
}

std::size_t parameter_count(const ModelConfig& config) {
  std::size_t n = 0;
  if (config.kind != FusionKind::single_q) n += encoder_parameter_count(config.dim_p);
  if (config.kind != FusionKind::single_p) n += encoder_parameter_count(config.dim_q);
  n += fused_width(config.kind) * kHeadHidden + kHeadHidden;
  n += kHeadHidden * config.classes + config.classes;
  return n;
}

// ---------------------------------------------------------------------------
// BranchEncoder

BranchEncoder::BranchEncoder(nn::ParamSet& params, std::string_view name, std::size_t input_dim,
                             double dropout)
    : input_dim_(input_dim),
      shape_(encoder_shape(input_dim)),
      conv1_(params, std::string(name) + ".conv1", 1, kConv1Filters, kKernelSize),
      conv2_(params, std::string(name) + ".conv2", kConv1Filters, kConv2Filters, kKernelSize),
      proj_(params, std::string(name) + ".proj", shape_.flat, kLatentDim),
      drop_(dropout) {}

void BranchEncoder::init(nn::ParamSet& params, nn::Rng& rng) const {
  conv1_.init(params, rng);
  conv2_.init(params, rng);
  proj_.init(params, rng);
}

Tensor2 BranchEncoder::forward(const nn::ParamSet& params, const Tensor2& x, nn::Rng& rng,
                               bool training) {
  if (x.cols() != input_dim_) {
    throw ShapeError("encoder expects dim " + std::to_string(input_dim_) + ", got " +
                     std::to_string(x.cols()));
  }
  nn::SignalBatch s = conv1_.forward(params, nn::signal_from_rows(x));
  act1_ = nn::relu(s.values);
  s = pool1_.forward({act1_, s.batch, s.length});
  s = conv2_.forward(params, s);
  act2_ = nn::relu(s.values);
  s = pool2_.forward({act2_, s.batch, s.length});
  const Tensor2 latent = proj_.forward(params, nn::flatten(s));
  return drop_.forward(latent, rng, training);
}

void BranchEncoder::backward(nn::ParamSet& params, const Tensor2& grad_latent) {
  const Tensor2 grad_flat = proj_.backward(params, drop_.backward(grad_latent));
  nn::SignalBatch g = pool2_.backward(nn::unflatten(grad_flat, kConv2Filters, shape_.pool2));
  g.values = nn::relu_backward(g.values, act2_);
  g = conv2_.backward(params, g);
  g = pool1_.backward(g);
  g.values = nn::relu_backward(g.values, act1_);
  conv1_.backward(params, g);
}

Tensor2 BranchEncoder::encode(const nn::ParamSet& params, const Tensor2& x) const {
  if (x.cols() != input_dim_) {
    throw ShapeError("encoder expects dim " + std::to_string(input_dim_) + ", got " +
                     std::to_string(x.cols()));
  }
  nn::SignalBatch s = nn::conv1d_forward(nn::signal_from_rows(x),
                                         params[conv1_.weight_id()].value,
                                         params[conv1_.bias_id()].value, kKernelSize);
  s.values = nn::relu(s.values);
  s = nn::maxpool1d(s).output;
  s = nn::conv1d_forward(s, params[conv2_.weight_id()].value, params[conv2_.bias_id()].value,
                         kKernelSize);
  s.values = nn::relu(s.values);
  s = nn::maxpool1d(s).output;
  return nn::dense_forward(nn::flatten(s), params[proj_.weight_id()].value,
                           params[proj_.bias_id()].value);
}

// ---------------------------------------------------------------------------
// Fusion blocks

Tensor2 hadamard_fuse(const Tensor2& rp, const Tensor2& rq) { return hadamard(rp, rq); }

OtFusion ot_fuse(const Tensor2& rp, const Tensor2& rq, const ot::SinkhornConfig& config,
                 const Tensor2* frozen_plan) {
  if (rp.rows() != rq.rows() || rp.cols() != rq.cols()) {
    throw ShapeError("ot_fuse needs equal-shape latents");
  }
  OtFusion out;
  if (frozen_plan != nullptr) {
    out.plan.gamma = *frozen_plan;
    out.plan.epsilon = config.epsilon;
    out.plan.converged = true;
    out.plan.error = ot::marginal_error(out.plan.gamma);
  } else {
    out.plan = ot::sinkhorn(ot::cost_matrix(rp, rq), config);
  }
  const ot::Transported moved = ot::transport(out.plan.gamma, rp, rq);
  out.fused = hconcat({&moved.p_to_q, &rq, &moved.q_to_p, &rp});
  return out;
}

// ---------------------------------------------------------------------------
// FusionModel

FusionModel::FusionModel(const ModelConfig& config)
    : config_(config),
      head_drop_(config.dropout),
      dropout_rng_(derive_seed(config.seed, 1)),
      fused_width_(fusion::fused_width(config.kind)) {
  if (config_.classes < 2) throw ParameterError("need at least 2 classes");
  if (uses_p()) encoder_p_ = BranchEncoder(params_, "encoder_a", config_.dim_p, config_.dropout);
  if (uses_q()) encoder_q_ = BranchEncoder(params_, "encoder_b", config_.dim_q, config_.dropout);
  hidden_ = nn::Dense(params_, "head.hidden", fused_width_, kHeadHidden);
  output_ = nn::Dense(params_, "head.output", kHeadHidden, config_.classes);

  if (params_.scalar_count() != parameter_count(config_)) {
    throw ShapeError("parameter ledger disagrees with constructed model");
  }

  nn::Rng init_rng(derive_seed(config_.seed, 0));
  if (uses_p()) encoder_p_.init(params_, init_rng);
  if (uses_q()) encoder_q_.init(params_, init_rng);
  hidden_.init(params_, init_rng);
  output_.init(params_, init_rng);
}

void FusionModel::check_inputs(const Tensor2& xp, const Tensor2& xq) const {
  if (xp.rows() != xq.rows()) {
    throw AlignmentError("batch rows differ between inputs: " + std::to_string(xp.rows()) +
                         " vs " + std::to_string(xq.rows()));
  }
  if (xp.rows() == 0) throw ShapeError("empty batch");
  if (uses_p() && xp.cols() != config_.dim_p) {
    throw ShapeError("first input has dim " + std::to_string(xp.cols()) + ", model expects " +
                     std::to_string(config_.dim_p));
  }
  if (uses_q() && xq.cols() != config_.dim_q) {
    throw ShapeError("second input has dim " + std::to_string(xq.cols()) + ", model expects " +
                     std::to_string(config_.dim_q));
  }
}

Tensor2 FusionModel::fuse(const Tensor2& rp, const Tensor2& rq, const Tensor2* frozen_plan,
                          Tensor2* plan_out) const {
  Tensor2 fused;
  switch (config_.kind) {
    case FusionKind::parrot: {
      OtFusion ot_part = ot_fuse(rp, rq, config_.sinkhorn, frozen_plan);
      const Tensor2 hp = hadamard_fuse(rp, rq);
      if (ot_part.fused.cols() != 4 * kLatentDim || hp.cols() != kLatentDim) {
        throw ShapeError("fusion width ledger violated");
      }
      fused = hconcat({&ot_part.fused, &hp});
      if (plan_out != nullptr) *plan_out = std::move(ot_part.plan.gamma);
      break;
    }
    case FusionKind::concat: fused = hconcat({&rp, &rq}); break;
    case FusionKind::single_p: fused = rp; break;
    case FusionKind::single_q: fused = rq; break;
  }
  if (fused.cols() != fused_width_) {
    throw ShapeError("fused width " + std::to_string(fused.cols()) + " != expected " +
                     std::to_string(fused_width_));
  }
  return fused;
}

ForwardOutput FusionModel::forward(const Tensor2& xp, const Tensor2& xq,
                                   const ForwardOptions& options) {
  check_inputs(xp, xq);
  recorded_ = false;
  rp_ = uses_p() ? encoder_p_.forward(params_, xp, dropout_rng_, options.training) : Tensor2{};
  rq_ = uses_q() ? encoder_q_.forward(params_, xq, dropout_rng_, options.training) : Tensor2{};

  ForwardOutput out;
  const Tensor2 fused = fuse(rp_, rq_, options.frozen_plan, &out.plan);
  plan_ = out.plan;
  hidden_act_ = nn::relu(hidden_.forward(params_, fused));
  out.penultimate = hidden_act_;
  out.logits =
      output_.forward(params_, head_drop_.forward(hidden_act_, dropout_rng_, options.training));
  recorded_ = true;
  return out;
}

void FusionModel::backward(const Tensor2& grad_logits) {
  if (!recorded_) throw StateError("backward called before forward");
  recorded_ = false;
  const Tensor2 grad_hidden =
      nn::relu_backward(head_drop_.backward(output_.backward(params_, grad_logits)), hidden_act_);
  const Tensor2 grad_fused = hidden_.backward(params_, grad_hidden);

  const std::size_t d = kLatentDim;
  switch (config_.kind) {
    case FusionKind::parrot: {
      // Blocks: [G*Rp | Rq | G^T*Rq | Rp | Rp.*Rq]; the plan is a constant.
      const Tensor2 g_moved_p = column_block(grad_fused, 0, d);
      const Tensor2 g_hp = column_block(grad_fused, 4 * d, d);
      Tensor2 grad_p = column_block(grad_fused, 3 * d, d);
      Tensor2 grad_q = column_block(grad_fused, d, d);
      matmul_accumulate(plan_, g_moved_p, grad_p, true, false);
      matmul_accumulate(plan_, column_block(grad_fused, 2 * d, d), grad_q);
      add_inplace(grad_p, hadamard(g_hp, rq_));
      add_inplace(grad_q, hadamard(g_hp, rp_));
      encoder_p_.backward(params_, grad_p);
      encoder_q_.backward(params_, grad_q);
      break;
    }
    case FusionKind::concat:
      encoder_p_.backward(params_, column_block(grad_fused, 0, d));
      encoder_q_.backward(params_, column_block(grad_fused, d, d));
      break;
    case FusionKind::single_p: encoder_p_.backward(params_, grad_fused); break;
    case FusionKind::single_q: encoder_q_.backward(params_, grad_fused); break;
  }
}

ForwardOutput FusionModel::infer(const Tensor2& xp, const Tensor2& xq) const {
  check_inputs(xp, xq);
  const Tensor2 rp = uses_p() ? encoder_p_.encode(params_, xp) : Tensor2{};
  const Tensor2 rq = uses_q() ? encoder_q_.encode(params_, xq) : Tensor2{};
  ForwardOutput out;
  const Tensor2 fused = fuse(rp, rq, nullptr, &out.plan);
  out.penultimate = nn::relu(
      nn::dense_forward(fused, params_[hidden_.weight_id()].value,
                        params_[hidden_.bias_id()].value));
  out.logits = nn::dense_forward(out.penultimate, params_[output_.weight_id()].value,
                                 params_[output_.bias_id()].value);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint IO. Every integer and float is little-endian.

namespace {

constexpr char kMagic[4] = {'P', 'R', 'R', 'T'};

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::string& bytes() const { return bytes_; }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(FormatErrorKind::truncated, "checkpoint ends early");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

void expect_arch(std::uint64_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw FormatError(FormatErrorKind::unsupported_version,
                      std::string("checkpoint ") + what + " is " + std::to_string(got) +
                          ", this build uses " + std::to_string(want));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FusionModel& model,
                     const std::vector<std::string>& class_names, const std::string& ptm_p,
                     const std::string& ptm_q) {
  const ModelConfig& c = model.config();
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.kind));
  w.u64(c.dim_p);
  w.u64(c.dim_q);
  w.u64(c.classes);
  w.u64(kConv1Filters);
  w.u64(kConv2Filters);
  w.u64(kKernelSize);
  w.u64(kLatentDim);
  w.u64(kHeadHidden);
  w.f64(c.dropout);
  w.f64(c.sinkhorn.epsilon);
  w.u64(static_cast<std::uint64_t>(c.sinkhorn.max_iters));
  w.f64(c.sinkhorn.tol);
  w.u64(c.seed);
  w.str(ptm_p);
  w.str(ptm_q);
  w.u64(class_names.size());
  for (const auto& name : class_names) w.str(name);
  w.u64(model.params().size());
  for (const auto& p : model.params()) {
    w.str(p.name);
    w.u64(p.value.rows());
    w.u64(p.value.cols());
    for (double v : p.value.values()) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrorKind::io, "cannot write " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw FormatError(FormatErrorKind::io, "write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorKind::io, "cannot open " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));

  if (r.raw(4) != std::string(kMagic, 4)) {
    throw FormatError(FormatErrorKind::bad_magic, path.string() + " is not a PRRT checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(FormatErrorKind::unsupported_version,
                      "checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  const std::uint32_t kind = r.u32();
  if (kind > static_cast<std::uint32_t>(FusionKind::single_q)) {
    throw FormatError(FormatErrorKind::unsupported_version, "unknown fusion kind");
  }
  ck.config.kind = static_cast<FusionKind>(kind);
  ck.config.dim_p = r.u64();
  ck.config.dim_q = r.u64();
  ck.config.classes = r.u64();
  expect_arch(r.u64(), kConv1Filters, "conv1 filters");
  expect_arch(r.u64(), kConv2Filters, "conv2 filters");
  expect_arch(r.u64(), kKernelSize, "kernel size");
  expect_arch(r.u64(), kLatentDim, "latent dim");
  expect_arch(r.u64(), kHeadHidden, "head width");
  ck.config.dropout = r.f64();
  ck.config.sinkhorn.epsilon = r.f64();
  ck.config.sinkhorn.max_iters = static_cast<int>(r.u64());
  ck.config.sinkhorn.tol = r.f64();
  ck.config.seed = r.u64();
  ck.ptm_p = r.str();
  ck.ptm_q = r.str();
  const std::uint64_t n_classes = r.u64();
  if (n_classes != ck.config.classes) {
    throw FormatError(FormatErrorKind::malformed_header, "class name count mismatch");
  }
  for (std::uint64_t i = 0; i < n_classes; ++i) ck.class_names.push_back(r.str());
  const std::uint64_t n_params = r.u64();
  for (std::uint64_t i = 0; i < n_params; ++i) {
    NamedTensor t;
    t.name = r.str();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (cols != 0 && rows > r.remaining() / 8 / cols) {
      throw FormatError(FormatErrorKind::truncated, "tensor " + t.name + " runs past the end");
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) v = r.f64();
    t.value = Tensor2(rows, cols, std::move(values));
    ck.params.push_back(std::move(t));
  }
  if (!r.at_end()) throw FormatError(FormatErrorKind::malformed_header, "trailing bytes");
  return ck;
}

FusionModel model_from_checkpoint(const Checkpoint& checkpoint) {
  FusionModel model(checkpoint.config);
  nn::ParamSet& params = model.params();
  if (checkpoint.params.size() != params.size()) {
    throw FormatError(FormatErrorKind::malformed_header,
                      "checkpoint holds " + std::to_string(checkpoint.params.size()) +
                          " tensors, architecture needs " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedTensor& t = checkpoint.params[i];
    nn::Parameter& p = params[i];
    if (t.name != p.name || t.value.rows() != p.value.rows() || t.value.cols() != p.value.cols()) {
      throw FormatError(FormatErrorKind::malformed_header,
                        "checkpoint tensor " + t.name + " does not match " + p.name);
    }
    p.value = t.value;
  }
  return model;
}

}  // namespace parrot::fusion
