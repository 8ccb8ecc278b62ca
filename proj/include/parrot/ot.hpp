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

// Entropic optimal transport between two batches of latent vectors.

#include "parrot/tensor.hpp"

namespace parrot::ot {

/// Pairwise row distances scaled into [0, 1] by the largest one.
struct CostMatrix {
  Tensor2 values;
};

struct SinkhornConfig {
  double epsilon = 0.1;
  int max_iters = 100;
  double tol = 1e-6;
};

struct MarginalError {
  double rows = 0.0;
  double cols = 0.0;

  double max() const noexcept { return rows > cols ? rows : cols; }
};

/// Coupling between uniform marginals 1/n (rows) and 1/m (columns).
struct TransportPlan {
  Tensor2 gamma;
  double epsilon = 0.0;
  int iterations_used = 0;
  bool converged = false;
  MarginalError error;
};

/// C[i][j] = |p_i - q_j| / max_ij |p_i - q_j|; all-zero when every distance is zero.
CostMatrix cost_matrix(const Tensor2& rp, const Tensor2& rq);

/// Log-domain Sinkhorn on an arbitrary finite cost matrix. Stops once the
/// largest marginal violation drops below `tol`, or after `max_iters` sweeps.
/// An all-zero cost returns the uniform product plan without iterating.
TransportPlan sinkhorn(const Tensor2& cost, const SinkhornConfig& config = {});
TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornConfig& config = {});

/// Deviation of `gamma` from the uniform marginals.
MarginalError marginal_error(const Tensor2& gamma);

struct Transported {
  Tensor2 p_to_q;  // gamma * rp
  Tensor2 q_to_p;  // gamma^T * rq
};

/// Literal plan products. Requires a square B x B plan and B-row inputs.
Transported transport(const Tensor2& gamma, const Tensor2& rp, const Tensor2& rq);

}  // namespace parrot::ot
