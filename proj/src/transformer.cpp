// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/transformer.hpp"

#include <cmath>

#include "spotlighter/error.hpp"
#include "spotlighter/rng.hpp"

namespace spot {

TransformerBlockParams TransformerBlockParams::zeros(std::size_t width, std::size_t heads,
                                                     std::size_t hidden) {
  if (width == 0 || heads == 0 || width % heads != 0) {
    throw Error(ErrorCode::DimMismatch, "model width must be a positive multiple of head count");
  }
  TransformerBlockParams p;
  p.width = width;
  p.heads = heads;
  p.hidden = hidden;
  p.wq = p.wk = p.wv = p.wo = Matrix(width, width);
  p.bq = p.bk = p.bv = p.bo = Vector(width, 0.0);
  p.ln1_gamma = p.ln2_gamma = Vector(width, 1.0);
  p.ln1_beta = p.ln2_beta = Vector(width, 0.0);
  p.w1 = Matrix(width, hidden);
  p.b1 = Vector(hidden, 0.0);
  p.w2 = Matrix(hidden, width);
  p.b2 = Vector(width, 0.0);
  return p;
}

TransformerBlockParams TransformerBlockParams::random(std::size_t width, std::size_t heads,
                                                      std::size_t hidden, double std,
                                                      bool identity_projections, Rng& rng) {
  TransformerBlockParams p = zeros(width, heads, hidden);
  auto fill = [&](Matrix& m, bool identity) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        m(r, c) = std * rng.gaussian() + ((identity && r == c) ? 1.0 : 0.0);
      }
    }
  };
  fill(p.wq, identity_projections);
  fill(p.wk, identity_projections);
  fill(p.wv, identity_projections);
  fill(p.wo, identity_projections);
  fill(p.w1, false);
  fill(p.w2, false);
  return p;
}

std::size_t TransformerBlockParams::parameter_count(std::size_t width, std::size_t hidden) {
  return 4 * (width * width + width)  // q, k, v, o
         + 4 * width                  // two layer norms
         + width * hidden + hidden + hidden * width + width;
}

std::size_t TransformerBlockParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors("")) n += t.data.size();
  return n;
}

namespace {

template <class View, class Self>
std::vector<View> block_tensors(Self& p, const std::string& prefix) {
  const std::size_t w = p.width, h = p.hidden;
  return {
      {prefix + "wq", {w, w}, p.wq.values()},      {prefix + "bq", {w}, p.bq},
      {prefix + "wk", {w, w}, p.wk.values()},      {prefix + "bk", {w}, p.bk},
      {prefix + "wv", {w, w}, p.wv.values()},      {prefix + "bv", {w}, p.bv},
      {prefix + "wo", {w, w}, p.wo.values()},      {prefix + "bo", {w}, p.bo},
      {prefix + "ln1_gamma", {w}, p.ln1_gamma},    {prefix + "ln1_beta", {w}, p.ln1_beta},
      {prefix + "ln2_gamma", {w}, p.ln2_gamma},    {prefix + "ln2_beta", {w}, p.ln2_beta},
      {prefix + "w1", {w, h}, p.w1.values()},      {prefix + "b1", {h}, p.b1},
      {prefix + "w2", {h, w}, p.w2.values()},      {prefix + "b2", {w}, p.b2},
  };
}

}  // namespace

std::vector<TensorView> TransformerBlockParams::tensors(const std::string& prefix) {
  return block_tensors<TensorView>(*this, prefix);
}

std::vector<ConstTensorView> TransformerBlockParams::tensors(const std::string& prefix) const {
  return block_tensors<ConstTensorView>(*this, prefix);
}

void TransformerBlockParams::validate() const {
  if (width == 0 || heads == 0 || width % heads != 0) {
    throw Error(ErrorCode::DimMismatch, "model width must be divisible by head count");
  }
  for (const auto& t : tensors("")) {
    std::size_t n = 1;
    for (auto s : t.shape) n *= s;
    if (n != t.data.size()) throw Error(ErrorCode::DimMismatch, "tensor " + t.name + " shape");
  }
  const auto square = [&](const Matrix& m) { return m.rows() == width && m.cols() == width; };
  if (!square(wq) || !square(wk) || !square(wv) || !square(wo) || w1.rows() != width ||
      w1.cols() != hidden || w2.rows() != hidden || w2.cols() != width) {
    throw Error(ErrorCode::DimMismatch, "projection matrix shapes");
  }
}

Matrix transformer_block(const Matrix& q, const Matrix& kv, const TransformerBlockParams& params,
                         BlockCache* cache) {
  const std::size_t d = params.width;
  if (q.cols() != d || kv.cols() != d) {
    throw Error(ErrorCode::DimMismatch, "transformer_block: token width " +
                                            std::to_string(q.cols()) + "/" +
                                            std::to_string(kv.cols()) + " vs model width " +
                                            std::to_string(d));
  }
  if (kv.rows() == 0) throw Error(ErrorCode::DimMismatch, "transformer_block: no key/value rows");
  const std::size_t nq = q.rows(), nk = kv.rows();
  const std::size_t heads = params.heads, dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  BlockCache local;
  BlockCache& c = cache ? *cache : local;

  c.qn = layer_norm(q, params.ln1_gamma, params.ln1_beta, &c.ln_q);
  c.kn = layer_norm(kv, params.ln1_gamma, params.ln1_beta, &c.ln_kv);
  c.qp = matmul(c.qn, params.wq);
  add_row_broadcast(c.qp, params.bq);
  c.kp = matmul(c.kn, params.wk);
  add_row_broadcast(c.kp, params.bk);
  c.vp = matmul(c.kn, params.wv);
  add_row_broadcast(c.vp, params.bv);

  c.attn.assign(heads, Matrix(nq, nk));
  c.heads_out = Matrix(nq, d);
  Vector logits(nk);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    Matrix& a = c.attn[h];
    for (std::size_t i = 0; i < nq; ++i) {
      const double* qi = c.qp.row(i).data() + off;
      for (std::size_t j = 0; j < nk; ++j) {
        const double* kj = c.kp.row(j).data() + off;
        double s = 0.0;
        for (std::size_t t = 0; t < dh; ++t) s += qi[t] * kj[t];
        logits[j] = s * scale;
      }
      const Vector p = softmax(logits, 1.0);
      double* out = c.heads_out.row(i).data() + off;
      for (std::size_t j = 0; j < nk; ++j) {
        a(i, j) = p[j];
        const double* vj = c.vp.row(j).data() + off;
        for (std::size_t t = 0; t < dh; ++t) out[t] += p[j] * vj[t];
      }
    }
  }

  c.t = matmul(c.heads_out, params.wo);
  add_row_broadcast(c.t, params.bo);
  for (std::size_t i = 0; i < c.t.size(); ++i) c.t.values()[i] += q.values()[i];

  c.z = layer_norm(c.t, params.ln2_gamma, params.ln2_beta, &c.ln_ffn);
  c.pre_act = matmul(c.z, params.w1);
  add_row_broadcast(c.pre_act, params.b1);
  c.act = c.pre_act;
  for (double& x : c.act.values()) x = gelu(x);
  Matrix out = matmul(c.act, params.w2);
  add_row_broadcast(out, params.b2);
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += c.t.values()[i];
  return out;
}

BlockGrads transformer_block_backward(const BlockCache& c, const TransformerBlockParams& params,
                                      const Matrix& dout, TransformerBlockParams* dp) {
  const std::size_t d = params.width;
  const std::size_t nq = c.t.rows(), nk = c.kp.rows();
  const std::size_t heads = params.heads, dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (dout.rows() != nq || dout.cols() != d) {
    throw Error(ErrorCode::DimMismatch, "transformer_block_backward: gradient shape");
  }

  // Scratch sinks when parameter gradients are not wanted (frozen blocks).
  TransformerBlockParams scratch;
  if (!dp) {
    scratch = TransformerBlockParams::zeros(d, heads, params.hidden);
    dp = &scratch;
  }

  // FFN branch.
  add_matmul_at(c.act, dout, dp->w2);
  add_column_sums(dout, dp->b2);
  Matrix dpre = matmul_bt(dout, params.w2);
  for (std::size_t i = 0; i < dpre.size(); ++i) {
    dpre.values()[i] *= gelu_derivative(c.pre_act.values()[i]);
  }
  add_matmul_at(c.z, dpre, dp->w1);
  add_column_sums(dpre, dp->b1);
  const Matrix dz = matmul_bt(dpre, params.w1);
  Matrix dt = layer_norm_backward(c.ln_ffn, dz, params.ln2_gamma, dp->ln2_gamma, dp->ln2_beta);
  for (std::size_t i = 0; i < dt.size(); ++i) dt.values()[i] += dout.values()[i];

  // Attention output projection.
  add_matmul_at(c.heads_out, dt, dp->wo);
  add_column_sums(dt, dp->bo);
  const Matrix dheads = matmul_bt(dt, params.wo);

  Matrix dqp(nq, d), dkp(nk, d), dvp(nk, d);
  Vector da(nk);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    const Matrix& a = c.attn[h];
    for (std::size_t i = 0; i < nq; ++i) {
      const double* g = dheads.row(i).data() + off;
      double rowdot = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        const double* vj = c.vp.row(j).data() + off;
        double s = 0.0;
        for (std::size_t t = 0; t < dh; ++t) s += g[t] * vj[t];
        da[j] = s;
        rowdot += s * a(i, j);
        double* dvj = dvp.row(j).data() + off;
        for (std::size_t t = 0; t < dh; ++t) dvj[t] += a(i, j) * g[t];
      }
      const double* qi = c.qp.row(i).data() + off;
      double* dqi = dqp.row(i).data() + off;
      for (std::size_t j = 0; j < nk; ++j) {
        const double ds = a(i, j) * (da[j] - rowdot) * scale;
        if (ds == 0.0) continue;
        const double* kj = c.kp.row(j).data() + off;
        double* dkj = dkp.row(j).data() + off;
        for (std::size_t t = 0; t < dh; ++t) {
          dqi[t] += ds * kj[t];
          dkj[t] += ds * qi[t];
        }
      }
    }
  }

  add_matmul_at(c.qn, dqp, dp->wq);
  add_column_sums(dqp, dp->bq);
  add_matmul_at(c.kn, dkp, dp->wk);
  add_column_sums(dkp, dp->bk);
  add_matmul_at(c.kn, dvp, dp->wv);
  add_column_sums(dvp, dp->bv);

  const Matrix dqn = matmul_bt(dqp, params.wq);
  Matrix dkn = matmul_bt(dkp, params.wk);
  const Matrix dkn_v = matmul_bt(dvp, params.wv);
  for (std::size_t i = 0; i < dkn.size(); ++i) dkn.values()[i] += dkn_v.values()[i];

  BlockGrads grads;
  grads.dq = layer_norm_backward(c.ln_q, dqn, params.ln1_gamma, dp->ln1_gamma, dp->ln1_beta);
  for (std::size_t i = 0; i < grads.dq.size(); ++i) grads.dq.values()[i] += dt.values()[i];
  grads.dkv = layer_norm_backward(c.ln_kv, dkn, params.ln1_gamma, dp->ln1_gamma, dp->ln1_beta);
  return grads;
}

double transformer_block_flops(std::size_t q, std::size_t n, std::size_t width,
                               std::size_t hidden) {
  const double d = static_cast<double>(width), h = static_cast<double>(hidden);
  const double nq = static_cast<double>(q), nk = static_cast<double>(n);
  double f = 0.0;
  f += 8.0 * d * (nq + nk);           // two layer-norm passes over inputs
  f += 2.0 * nq * d * d;              // query projection
  f += 2.0 * 2.0 * nk * d * d;        // key and value projections
  f += 2.0 * nq * nk * d;             // scores
  f += 3.0 * nq * nk;                 // softmax
  f += 2.0 * nq * nk * d;             // weighted values
  f += 2.0 * nq * d * d + nq * d;     // output projection + residual
  f += 8.0 * nq * d;                  // second layer norm
  f += 2.0 * nq * d * h * 2.0;        // FFN matmuls
  f += 10.0 * nq * h + nq * d;        // activation + residual
  return f;
}

}  // namespace spot
