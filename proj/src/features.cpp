// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/features.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include <json.hpp>

#include "byte_io.hpp"
#include "spotlighter/error.hpp"
#include "spotlighter/rng.hpp"

namespace spot {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "SPOT";
constexpr std::uint8_t kVersion = 0x01;

// Normalizes v and rounds it to binary32 so that file round trips are exact.
Vector stored_unit(std::span<const double> v) {
  Vector u = l2_normalize(v);
  round_to_f32(u);
  return u;
}

Vector jitter(std::span<const double> base, double sigma, Rng& rng) {
  const double scale = sigma / std::sqrt(static_cast<double>(base.size()));
  Vector out(base.begin(), base.end());
  for (double& x : out) x += scale * rng.gaussian();
  return out;
}

}  // namespace

std::string to_string(Split s) { return s == Split::Base ? "base" : "novel"; }

Split parse_split(const std::string& s) {
  if (s == "base") return Split::Base;
  if (s == "novel") return Split::Novel;
  throw Error(ErrorCode::HeaderMismatch, "unknown split tag '" + s + "'");
}

void FeatureSet::validate() const {
  if (width == 0 || n_tok == 0) throw Error(ErrorCode::DimMismatch, "feature set has zero width");
  if (text_embeddings.cols() != width) {
    throw Error(ErrorCode::DimMismatch, "text embedding width differs from token width");
  }
  if (has_labels && labels.size() != items.size()) {
    throw Error(ErrorCode::DimMismatch, "label count differs from item count");
  }
  for (const auto& item : items) {
    if (item.rows() != n_tok || item.cols() != width) {
      throw Error(ErrorCode::DimMismatch, "item token grid shape differs from declared shape");
    }
    for (std::size_t r = 0; r < item.rows(); ++r) {
      if (!(norm(item.row(r)) > 0.0)) throw Error(ErrorCode::ZeroVector, "zero token row");
    }
  }
  for (auto label : labels) {
    if (label >= n_classes()) throw Error(ErrorCode::LabelOutOfRange, "label exceeds class count");
  }
}

void SynthSpec::validate() const {
  if (n_classes == 0) throw Error(ErrorCode::InvalidSpec, "n_classes must be positive");
  if (n_tok == 0) throw Error(ErrorCode::InvalidSpec, "n_tok must be positive");
  if (width < 2) throw Error(ErrorCode::InvalidSpec, "width must be at least 2");
  if (signal_tokens > n_tok) throw Error(ErrorCode::InvalidSpec, "signal_tokens exceeds n_tok");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorCode::InvalidSpec, "noise_sigma must be finite and non-negative");
  }
  if (signal_tokens < n_tok && distractor_pool == 0) {
    throw Error(ErrorCode::InvalidSpec, "distractor_pool must be positive when n_tok > signal_tokens");
  }
}

Episode generate_episode(const SynthSpec& spec, std::size_t shots, std::size_t test_per_class) {
  spec.validate();
  if (shots == 0) throw Error(ErrorCode::InvalidSpec, "shots must be at least 1");
  if (test_per_class == 0) throw Error(ErrorCode::InvalidSpec, "test_per_class must be at least 1");

  // Draw order is part of the format contract: class means, distractor pool,
  // text embeddings, then base-train, base-test and novel-test items.
  Rng rng(spec.seed);
  const std::size_t total = 2 * spec.n_classes;
  std::vector<Vector> means(total);
  for (auto& m : means) m = rng.unit_vector(spec.width);
  std::vector<Vector> pool(spec.distractor_pool);
  for (auto& p : pool) p = rng.unit_vector(spec.width);
  Matrix text(total, spec.width);
  for (std::size_t c = 0; c < total; ++c) {
    const Vector t = stored_unit(jitter(means[c], spec.noise_sigma, rng));
    std::copy(t.begin(), t.end(), text.row(c).begin());
  }

  const auto make_item = [&](std::size_t cls) {
    Matrix tokens(spec.n_tok, spec.width);
    std::vector<std::size_t> order(spec.n_tok);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < spec.signal_tokens; ++i) {
      const std::size_t j = i + rng.below(spec.n_tok - i);
      std::swap(order[i], order[j]);
    }
    std::vector<bool> is_signal(spec.n_tok, false);
    for (std::size_t i = 0; i < spec.signal_tokens; ++i) is_signal[order[i]] = true;
    for (std::size_t t = 0; t < spec.n_tok; ++t) {
      const Vector& center = is_signal[t] ? means[cls] : pool[rng.below(pool.size())];
      const Vector v = stored_unit(jitter(center, spec.noise_sigma, rng));
      std::copy(v.begin(), v.end(), tokens.row(t).begin());
    }
    return tokens;
  };

  const std::string provenance = std::string("synthetic:") + kRngAlgorithm +
                                 ":seed=" + std::to_string(spec.seed);
  const auto make_set = [&](Split split, std::size_t first_class, std::size_t per_class) {
    FeatureSet fs;
    fs.n_tok = spec.n_tok;
    fs.width = spec.width;
    fs.split = split;
    fs.has_labels = true;
    fs.provenance = provenance;
    fs.text_embeddings = slice_rows(text, first_class, first_class + spec.n_classes);
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
      for (std::size_t s = 0; s < per_class; ++s) {
        fs.items.push_back(make_item(first_class + c));
        fs.labels.push_back(static_cast<std::uint32_t>(c));
      }
    }
    return fs;
  };

  Episode ep;
  ep.base_train = make_set(Split::Base, 0, shots);
  ep.base_test = make_set(Split::Base, 0, test_per_class);
  ep.novel_test = make_set(Split::Novel, spec.n_classes, test_per_class);
  return ep;
}

std::vector<std::uint8_t> encode_features(const FeatureSet& fs) {
  fs.validate();
  nlohmann::json header = {
      {"dtype", "f32"},
      {"layout", "row-major"},
      {"n_items", fs.items.size()},
      {"n_tok", fs.n_tok},
      {"d", fs.width},
      {"n_classes", fs.n_classes()},
      {"has_labels", fs.has_labels},
      {"split", to_string(fs.split)},
      {"provenance", fs.provenance},
  };
  const std::string json = header.dump();
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(json.size()));
  w.bytes(json);
  if (fs.has_labels) {
    for (auto label : fs.labels) w.u32(label);
  }
  for (const auto& item : fs.items) w.f32s(item.values());
  w.f32s(fs.text_embeddings.values());
  return std::move(w.buffer());
}

FeatureSet decode_features(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  if (!r.has(kMagic.size())) throw Error(ErrorCode::TruncatedFile, "file shorter than magic");
  if (r.bytes(kMagic.size()) != kMagic) throw Error(ErrorCode::BadMagic, "not a SPOT feature file");
  const std::uint8_t version = r.u8();
  if (version != kVersion) {
    throw Error(ErrorCode::VersionMismatch, "feature file version " + std::to_string(version));
  }
  const std::uint32_t header_len = r.u32();
  const std::string text = r.bytes(header_len);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::HeaderMismatch, std::string("unparseable header: ") + e.what());
  }

  FeatureSet fs;
  std::size_t n_items = 0, n_classes = 0;
  try {
    if (header.at("dtype") != "f32" || header.at("layout") != "row-major") {
      throw Error(ErrorCode::HeaderMismatch, "unsupported dtype/layout");
    }
    n_items = header.at("n_items").get<std::size_t>();
    fs.n_tok = header.at("n_tok").get<std::size_t>();
    fs.width = header.at("d").get<std::size_t>();
    n_classes = header.at("n_classes").get<std::size_t>();
    fs.has_labels = header.at("has_labels").get<bool>();
    fs.split = parse_split(header.at("split").get<std::string>());
    fs.provenance = header.value("provenance", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::HeaderMismatch, std::string("bad header field: ") + e.what());
  }

  const std::size_t expected = (fs.has_labels ? 4 * n_items : 0) +
                               4 * n_items * fs.n_tok * fs.width + 4 * n_classes * fs.width;
  if (r.remaining() != expected) {
    throw Error(ErrorCode::HeaderMismatch, "header declares " + std::to_string(expected) +
                                               " payload bytes, file has " +
                                               std::to_string(r.remaining()));
  }
  if (fs.has_labels) {
    fs.labels.resize(n_items);
    for (auto& label : fs.labels) label = r.u32();
  }
  fs.items.reserve(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    Matrix m(fs.n_tok, fs.width);
    r.f32s(m.values());
    fs.items.push_back(std::move(m));
  }
  fs.text_embeddings = Matrix(n_classes, fs.width);
  r.f32s(fs.text_embeddings.values());
  fs.validate();
  return fs;
}

void write_features(const FeatureSet& fs, const std::filesystem::path& path) {
  detail::write_file(path, encode_features(fs));
}

FeatureSet read_features(const std::filesystem::path& path) {
  return decode_features(detail::read_file(path));
}

}  // namespace spot
