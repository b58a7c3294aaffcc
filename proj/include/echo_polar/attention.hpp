// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "echo_polar/errors.hpp"

namespace echo_polar {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

/// Multi-head projection weights. Rows are tokens, so a projection is
/// X * W + b with W of shape [d][d]; head h owns columns [h*dh, (h+1)*dh).
struct AttentionParams {
  std::size_t n_heads = 1;
  Matrix w_query, w_key, w_value, w_output;
  RowVector b_query, b_key, b_value, b_output;

  std::size_t dim() const { return static_cast<std::size_t>(w_query.rows()); }
  std::size_t head_dim() const { return dim() / n_heads; }

  void validate() const {
    const auto d = static_cast<Eigen::Index>(dim());
    require(n_heads >= 1 && d > 0 && dim() % n_heads == 0, "attention: d must be divisible by n_heads");
    for (const Matrix* w : {&w_query, &w_key, &w_value, &w_output})
      require(w->rows() == d && w->cols() == d && w->allFinite(), "attention: projection must be finite d x d");
    for (const RowVector* b : {&b_query, &b_key, &b_value, &b_output})
      require(b->size() == d && b->allFinite(), "attention: bias must be finite of length d");
  }

  static AttentionParams zeros(std::size_t d, std::size_t n_heads) {
    const auto n = static_cast<Eigen::Index>(d);
    AttentionParams p;
    p.n_heads = n_heads;
    p.w_query = p.w_key = p.w_value = p.w_output = Matrix::Zero(n, n);
    p.b_query = p.b_key = p.b_value = p.b_output = RowVector::Zero(n);
    return p;
  }

  /// Weights uniform in [-1/sqrt(d), 1/sqrt(d)] drawn in (q, k, v, o) row-major
  /// order from mt19937_64(seed); biases start at zero.
  static AttentionParams random(std::size_t d, std::size_t n_heads, std::uint64_t seed) {
    AttentionParams p = zeros(d, n_heads);
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (Matrix* w : {&p.w_query, &p.w_key, &p.w_value, &p.w_output})
      for (Eigen::Index i = 0; i < w->rows(); ++i)
        for (Eigen::Index j = 0; j < w->cols(); ++j) (*w)(i, j) = uni(rng);
    p.validate();
    return p;
  }
};

/// Activations kept by the forward pass for attention_backward.
struct AttentionCache {
  Matrix queries, keys, values;            // inputs
  Matrix q_proj, k_proj, v_proj;           // after input projections
  std::vector<Matrix> weights;             // per head softmax, [m][k]
  Matrix heads;                            // concatenated head outputs, [m][d]
};

struct AttentionGrads {
  Matrix d_queries, d_keys, d_values;
  AttentionParams d_params;
};

/// Row-wise softmax with max subtraction.
inline Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double sum = 0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - mx);
      sum += out(i, j);
    }
    out.row(i) /= sum;
  }
  return out;
}

/// Scaled dot-product multi-head attention:
///   Y = concat_h softmax(Q_h K_h^T / sqrt(dh)) V_h * W_o + b_o
/// with Q = queries W_q + b_q, K = keys W_k + b_k, V = values W_v + b_v.
/// With zero keys the queries are returned unchanged.
inline Matrix attention_forward(const Matrix& queries, const Matrix& keys, const Matrix& values,
                                const AttentionParams& params, AttentionCache* cache = nullptr) {
  const auto d = static_cast<Eigen::Index>(params.dim());
  require(queries.cols() == d && keys.cols() == d && values.cols() == d, "attention: feature width != d");
  require(keys.rows() == values.rows(), "attention: key and value counts differ");
  if (keys.rows() == 0) return queries;

  const auto dh = static_cast<Eigen::Index>(params.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix qp = (queries * params.w_query).rowwise() + params.b_query;
  Matrix kp = (keys * params.w_key).rowwise() + params.b_key;
  Matrix vp = (values * params.w_value).rowwise() + params.b_value;

  Matrix heads(queries.rows(), d);
  std::vector<Matrix> weights;
  weights.reserve(params.n_heads);
  for (std::size_t h = 0; h < params.n_heads; ++h) {
    const auto c0 = static_cast<Eigen::Index>(h) * dh;
    Matrix logits = (qp.middleCols(c0, dh) * kp.middleCols(c0, dh).transpose()) * scale;
    Matrix a = softmax_rows(logits);
    heads.middleCols(c0, dh) = a * vp.middleCols(c0, dh);
    weights.push_back(std::move(a));
  }
  Matrix out = (heads * params.w_output).rowwise() + params.b_output;

  if (cache) {
    *cache = AttentionCache{queries, keys, values, std::move(qp), std::move(kp), std::move(vp),
                            std::move(weights), std::move(heads)};
  }
  return out;
}

/// Cross-attention where keys and values come from the same rows.
inline Matrix cross_attention(const Matrix& queries, const Matrix& keys_values, const AttentionParams& params,
                              AttentionCache* cache = nullptr) {
  return attention_forward(queries, keys_values, keys_values, params, cache);
}

/// Exact gradients of sum(d_out .* Y) w.r.t. inputs and parameters.
inline AttentionGrads attention_backward(const AttentionCache& cache, const Matrix& d_out,
                                         const AttentionParams& params) {
  const auto d = static_cast<Eigen::Index>(params.dim());
  require(!cache.weights.empty(), "attention_backward: cache is empty");
  require(d_out.rows() == cache.queries.rows() && d_out.cols() == d,
          "attention_backward: upstream gradient shape mismatch");
  const auto dh = static_cast<Eigen::Index>(params.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  AttentionGrads g;
  g.d_params = AttentionParams::zeros(params.dim(), params.n_heads);
  g.d_params.w_output = cache.heads.transpose() * d_out;
  g.d_params.b_output = d_out.colwise().sum();
  const Matrix d_heads = d_out * params.w_output.transpose();

  Matrix d_qp = Matrix::Zero(cache.q_proj.rows(), d);
  Matrix d_kp = Matrix::Zero(cache.k_proj.rows(), d);
  Matrix d_vp = Matrix::Zero(cache.v_proj.rows(), d);
  for (std::size_t h = 0; h < params.n_heads; ++h) {
    const auto c0 = static_cast<Eigen::Index>(h) * dh;
    const Matrix& a = cache.weights[h];
    const Matrix d_head = d_heads.middleCols(c0, dh);
    const Matrix d_a = d_head * cache.v_proj.middleCols(c0, dh).transpose();
    d_vp.middleCols(c0, dh) = a.transpose() * d_head;
    // Softmax Jacobian: dS = A .* (dA - rowsum(dA .* A)).
    const Eigen::VectorXd row_dot = (d_a.array() * a.array()).rowwise().sum();
    const Matrix d_logits = (a.array() * (d_a.colwise() - row_dot).array()).matrix() * scale;
    d_qp.middleCols(c0, dh) = d_logits * cache.k_proj.middleCols(c0, dh);
    d_kp.middleCols(c0, dh) = d_logits.transpose() * cache.q_proj.middleCols(c0, dh);
  }

  g.d_params.w_query = cache.queries.transpose() * d_qp;
  g.d_params.w_key = cache.keys.transpose() * d_kp;
  g.d_params.w_value = cache.values.transpose() * d_vp;
  g.d_params.b_query = d_qp.colwise().sum();
  g.d_params.b_key = d_kp.colwise().sum();
  g.d_params.b_value = d_vp.colwise().sum();
  g.d_queries = d_qp * params.w_query.transpose();
  g.d_keys = d_kp * params.w_key.transpose();
  g.d_values = d_vp * params.w_value.transpose();
  return g;
}

/// Sinusoidal position code: pe(p, 2i) = sin(p / 10000^(2i/d)), pe(p, 2i+1) = cos(...).
inline Matrix sinusoidal_encoding(std::size_t n_positions, std::size_t d) {
  Matrix pe(static_cast<Eigen::Index>(n_positions), static_cast<Eigen::Index>(d));
  for (std::size_t p = 0; p < n_positions; ++p)
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      const double angle = static_cast<double>(p) * rate;
      pe(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

}  // namespace echo_polar
