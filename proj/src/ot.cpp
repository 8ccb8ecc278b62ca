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

#include "parrot/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "parrot/errors.hpp"

namespace parrot::ot {
namespace {

// log(sum_k exp(x_k))
double log_sum_exp(const std::vector<double>& x) {
  const double peak = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

Tensor2 uniform_plan(std::size_t n, std::size_t m) {
  return Tensor2(n, m, 1.0 / static_cast<double>(n * m));
}

}  // namespace

CostMatrix cost_matrix(const Tensor2& rp, const Tensor2& rq) {
  if (rp.rows() == 0 || rq.rows() == 0) throw ShapeError("cost matrix needs non-empty batches");
  if (rp.cols() != rq.cols()) {
    throw ShapeError("cost matrix feature dims differ: " + std::to_string(rp.cols()) + " vs " +
                     std::to_string(rq.cols()));
  }
  Tensor2 c(rp.rows(), rq.rows());
  double largest = 0.0;
  for (std::size_t i = 0; i < rp.rows(); ++i) {
    const auto a = rp.row(i);
    for (std::size_t j = 0; j < rq.rows(); ++j) {
      const auto b = rq.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
      }
      c(i, j) = std::sqrt(s);
      largest = std::max(largest, c(i, j));
    }
  }
  if (!std::isfinite(largest)) throw NumericError("non-finite distance in cost matrix");
  if (largest > 0.0) {
    for (double& v : c.values()) v /= largest;
  }
  return CostMatrix{std::move(c)};
}

MarginalError marginal_error(const Tensor2& gamma) {
  const double a = 1.0 / static_cast<double>(gamma.rows());
  const double b = 1.0 / static_cast<double>(gamma.cols());
  MarginalError err;
  std::vector<double> col_sums(gamma.cols(), 0.0);
  for (std::size_t i = 0; i < gamma.rows(); ++i) {
    double row_sum = 0.0;
    const auto r = gamma.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      row_sum += r[j];
      col_sums[j] += r[j];
    }
    err.rows = std::max(err.rows, std::abs(row_sum - a));
  }
  for (double s : col_sums) err.cols = std::max(err.cols, std::abs(s - b));
  return err;
}

TransportPlan sinkhorn(const Tensor2& cost, const SinkhornConfig& config) {
  if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon)) {
    throw ParameterError("sinkhorn epsilon must be > 0, got " + std::to_string(config.epsilon));
  }
  if (config.max_iters < 0) throw ParameterError("sinkhorn max_iters must be >= 0");
  if (!(config.tol >= 0.0)) throw ParameterError("sinkhorn tol must be >= 0");
  if (cost.rows() == 0 || cost.cols() == 0) throw ShapeError("sinkhorn needs a non-empty cost");
  cost.require_finite("sinkhorn cost");

  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  TransportPlan plan;
  plan.epsilon = config.epsilon;

  const bool all_zero =
      std::all_of(cost.values().begin(), cost.values().end(), [](double v) { return v == 0.0; });
  if (all_zero) {
    plan.gamma = uniform_plan(n, m);
    plan.error = marginal_error(plan.gamma);
    plan.converged = true;
    return plan;
  }

  const double eps = config.epsilon;
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  std::vector<double> f(n, 0.0);
  std::vector<double> g(m, 0.0);
  std::vector<double> scratch_row(m);
  std::vector<double> scratch_col(n);

  auto build_plan = [&] {
    Tensor2 gamma(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) gamma(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps);
    }
    return gamma;
  };

  plan.gamma = build_plan();
  plan.error = marginal_error(plan.gamma);
  for (int it = 0; it < config.max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) scratch_row[j] = (g[j] - cost(i, j)) / eps;
      f[i] = eps * (log_a - log_sum_exp(scratch_row));
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) scratch_col[i] = (f[i] - cost(i, j)) / eps;
      g[j] = eps * (log_b - log_sum_exp(scratch_col));
    }
    plan.iterations_used = it + 1;
    plan.gamma = build_plan();
    plan.error = marginal_error(plan.gamma);
    if (plan.error.max() < config.tol) {
      plan.converged = true;
      break;
    }
  }
  plan.gamma.require_finite("sinkhorn");
  return plan;
}

TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornConfig& config) {
  return sinkhorn(cost.values, config);
}

Transported transport(const Tensor2& gamma, const Tensor2& rp, const Tensor2& rq) {
  if (gamma.rows() != gamma.cols()) throw ShapeError("transport needs a square plan");
  if (rp.rows() != gamma.rows() || rq.rows() != gamma.rows()) {
    throw ShapeError("transport plan is " + std::to_string(gamma.rows()) + "x" +
                     std::to_string(gamma.cols()) + " but batches have " +
                     std::to_string(rp.rows()) + " and " + std::to_string(rq.rows()) + " rows");
  }
  Transported out{matmul(gamma, rp), matmul(gamma, rq, true, false)};
  out.p_to_q.require_finite("transport");
  out.q_to_p.require_finite("transport");
  return out;
}

}  // namespace parrot::ot
