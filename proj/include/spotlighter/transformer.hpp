// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spotlighter/numerics.hpp"

namespace spot {

class Rng;

/// Named view of one parameter tensor, used for optimizer steps, checkpoints
/// and gradient checks.
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<double> data;
};

struct ConstTensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const double> data;
};

/// Pre-layer-norm attention block:
///   T   = MultiHead(LN1(Q), LN1(KV), LN1(KV)) + Q
///   out = FFN(LN2(T)) + T
/// Projections are width x width; head h owns columns [h*dh, (h+1)*dh) of the
/// query/key/value projections and the same rows of the output projection.
struct TransformerBlockParams {
  std::size_t width = 0;
  std::size_t heads = 1;
  std::size_t hidden = 0;

  Matrix wq, wk, wv, wo;
  Vector bq, bk, bv, bo;
  Vector ln1_gamma, ln1_beta;
  Vector ln2_gamma, ln2_beta;
  Matrix w1;  // width x hidden
  Vector b1;
  Matrix w2;  // hidden x width
  Vector b2;

  /// All weights and biases zero, layer norms at unit scale / zero shift.
  static TransformerBlockParams zeros(std::size_t width, std::size_t heads, std::size_t hidden);

  /// Weights drawn from N(0, std^2); when identity_projections is set the
  /// four attention projections start at I + N(0, std^2).
  static TransformerBlockParams random(std::size_t width, std::size_t heads, std::size_t hidden,
                                       double std, bool identity_projections, Rng& rng);

  std::size_t parameter_count() const;
  static std::size_t parameter_count(std::size_t width, std::size_t hidden);

  std::vector<TensorView> tensors(const std::string& prefix);
  std::vector<ConstTensorView> tensors(const std::string& prefix) const;

  /// Throws DimMismatch unless every tensor matches width/hidden and
  /// width % heads == 0.
  void validate() const;

  bool operator==(const TransformerBlockParams&) const = default;
};

struct BlockCache {
  Matrix q_in;
  LayerNormCache ln_q, ln_kv, ln_ffn;
  Matrix qn, kn;          // normalized query / key-value rows
  Matrix qp, kp, vp;      // projected
  std::vector<Matrix> attn;  // per head, q x n
  Matrix heads_out;       // q x width, concatenated heads
  Matrix t;               // after first residual
  Matrix z;               // LN2(t)
  Matrix pre_act;         // q x hidden
  Matrix act;             // gelu(pre_act)
};

/// Forward pass. When cache is non-null, intermediates are retained for
/// transformer_block_backward.
Matrix transformer_block(const Matrix& q, const Matrix& kv, const TransformerBlockParams& params,
                         BlockCache* cache = nullptr);

struct BlockGrads {
  Matrix dq;
  Matrix dkv;
};

/// Backward pass. Parameter gradients are accumulated into *dparams when it is
/// non-null (it must have the same shapes as params).
BlockGrads transformer_block_backward(const BlockCache& cache, const TransformerBlockParams& params,
                                      const Matrix& dout, TransformerBlockParams* dparams);

/// Multiply-add count (x2) of one forward pass for q queries over n keys.
double transformer_block_flops(std::size_t q, std::size_t n, std::size_t width,
                               std::size_t hidden);

}  // namespace spot
