// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/memory_bank.hpp"

#include <algorithm>
#include <cmath>

#include "spotlighter/error.hpp"
#include "spotlighter/rng.hpp"

namespace spot {

std::string to_string(InitMode m) { return m == InitMode::TextSeeded ? "text" : "random"; }

InitMode parse_init_mode(const std::string& s) {
  if (s == "text" || s == "text-seeded") return InitMode::TextSeeded;
  if (s == "random") return InitMode::Random;
  throw Error(ErrorCode::Config, "init_mode must be 'text' or 'random', got '" + s + "'");
}

const Matrix& MemoryBank::class_prototypes(std::size_t c) const {
  if (c >= prototypes.size()) throw Error(ErrorCode::LabelOutOfRange, "category out of range");
  return prototypes[c];
}

MemoryBank init_bank(const Matrix& text_embeddings, std::size_t n_protos, InitMode mode,
                     double sigma, std::uint64_t seed, double beta) {
  if (n_protos == 0) throw Error(ErrorCode::InvalidK, "prototype count must be at least 1");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "prototype jitter must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "beta outside [0,1]");
  const std::size_t d = text_embeddings.cols();
  Rng rng(seed);
  MemoryBank bank;
  bank.beta = beta;
  bank.init_mode = mode;
  const double scale = sigma / std::sqrt(static_cast<double>(d));
  for (std::size_t c = 0; c < text_embeddings.rows(); ++c) {
    Matrix protos(n_protos, d);
    const Vector seed_vec = l2_normalize(text_embeddings.row(c));
    for (std::size_t k = 0; k < n_protos; ++k) {
      Vector u;
      if (mode == InitMode::TextSeeded) {
        u = seed_vec;
        if (sigma > 0.0) {
          for (double& x : u) x += scale * rng.gaussian();
        }
        u = l2_normalize(u);
      } else {
        u = rng.unit_vector(d);
      }
      round_to_f32(u);
      std::copy(u.begin(), u.end(), protos.row(k).begin());
    }
    bank.prototypes.push_back(std::move(protos));
  }
  return bank;
}

Vector pool_tokens(const Matrix& tokens) { return l2_normalize(mean_rows(tokens)); }

std::size_t match_class(std::span<const double> pooled_visual, const MemoryBank& bank) {
  const Vector q = l2_normalize(pooled_visual);
  std::size_t best_class = 0;
  double best = -2.0;
  for (std::size_t c = 0; c < bank.n_classes(); ++c) {
    const Matrix& protos = bank.prototypes[c];
    for (std::size_t k = 0; k < protos.rows(); ++k) {
      const double s = dot(q, protos.row(k)) / norm(protos.row(k));
      if (s > best) {
        best = s;
        best_class = c;
      }
    }
  }
  return best_class;
}

Assignment assign_tokens(const Matrix& tok_act, const Matrix& class_protos, double temperature) {
  if (tok_act.rows() == 0) throw Error(ErrorCode::EmptySelection, "no tokens to assign");
  if (class_protos.rows() == 0) throw Error(ErrorCode::InvalidK, "no prototypes");
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::NonPositiveTemperature, "assignment temperature must be positive");
  }
  const Matrix cos = cosine_matrix(tok_act, class_protos);
  Assignment a;
  a.soft = Matrix(cos.rows(), cos.cols());
  a.hard.resize(cos.rows());
  for (std::size_t i = 0; i < cos.rows(); ++i) {
    const Vector p = softmax(cos.row(i), temperature);
    std::copy(p.begin(), p.end(), a.soft.row(i).begin());
    a.hard[i] = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  return a;
}

void momentum_update(MemoryBank& bank, std::size_t category, const Assignment& assignment,
                     const Matrix& tok_act) {
  if (category >= bank.n_classes()) throw Error(ErrorCode::LabelOutOfRange, "category range");
  Matrix& protos = bank.prototypes[category];
  if (assignment.soft.rows() != tok_act.rows() || assignment.soft.cols() != protos.rows() ||
      tok_act.cols() != protos.cols()) {
    throw Error(ErrorCode::DimMismatch, "assignment does not match tokens/prototypes");
  }
  if (bank.beta == 1.0) return;  // frozen
  const std::size_t d = protos.cols();
  for (std::size_t j = 0; j < protos.rows(); ++j) {
    Vector acc(d, 0.0);
    bool any = false;
    for (std::size_t i = 0; i < tok_act.rows(); ++i) {
      if (assignment.hard[i] != j) continue;
      any = true;
      const double w = assignment.soft(i, j);
      const auto tok = tok_act.row(i);
      for (std::size_t t = 0; t < d; ++t) acc[t] += w * tok[t];
    }
    if (!any) continue;
    auto u = protos.row(j);
    for (std::size_t t = 0; t < d; ++t) u[t] = bank.beta * u[t] + (1.0 - bank.beta) * acc[t];
    if (bank.renormalize) {
      const Vector un = l2_normalize(u);
      std::copy(un.begin(), un.end(), u.begin());
    }
    round_to_f32(u);
  }
}

double local_loss(const MemoryBank& bank, const Matrix& tok_act, std::size_t label,
                  double temperature) {
  if (label >= bank.n_classes()) throw Error(ErrorCode::LabelOutOfRange, "label out of range");
  if (!(temperature > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "temperature");
  if (tok_act.rows() == 0) throw Error(ErrorCode::EmptySelection, "no activated tokens");
  Vector logits(bank.n_classes());
  for (std::size_t c = 0; c < bank.n_classes(); ++c) {
    const Matrix cos = cosine_matrix(tok_act, bank.prototypes[c]);
    double s = 0.0;
    for (std::size_t i = 0; i < cos.rows(); ++i) {
      const auto row = cos.row(i);
      s += *std::max_element(row.begin(), row.end());
    }
    logits[c] = s / static_cast<double>(cos.rows());
  }
  return -log_softmax(logits, temperature)[label];
}

}  // namespace spot
