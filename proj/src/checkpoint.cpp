// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/checkpoint.hpp"

#include <json.hpp>

#include "byte_io.hpp"
#include "spotlighter/error.hpp"

namespace spot {

namespace {

constexpr std::string_view kMagic = "SPOTCKPT";
using nlohmann::json;

json loss_json(const LossBreakdown& l) {
  return {{"cls", l.cls},           {"cls_low", l.cls_low},     {"cls_high", l.cls_high},
          {"reg_text", l.reg_text}, {"kl_visual", l.kl_visual}, {"local", l.local},
          {"total", l.total}};
}

LossBreakdown loss_from(const json& j) {
  LossBreakdown l;
  l.cls = j.at("cls").get<double>();
  l.cls_low = j.at("cls_low").get<double>();
  l.cls_high = j.at("cls_high").get<double>();
  l.reg_text = j.at("reg_text").get<double>();
  l.kl_visual = j.at("kl_visual").get<double>();
  l.local = j.at("local").get<double>();
  l.total = j.at("total").get<double>();
  return l;
}

template <class View>
void append_views(std::vector<View>& out, std::vector<View> more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

std::vector<ConstTensorView> state_tensors(const TrainedState& s) {
  std::vector<ConstTensorView> out = s.params.tensors();
  append_views(out, s.theta.tensors("theta."));
  for (std::size_t c = 0; c < s.bank.n_classes(); ++c) {
    const Matrix& p = s.bank.prototypes[c];
    out.push_back({"bank." + std::to_string(c), {p.rows(), p.cols()}, p.values()});
  }
  return out;
}

std::vector<TensorView> state_tensors(TrainedState& s) {
  std::vector<TensorView> out = s.params.tensors();
  append_views(out, s.theta.tensors("theta."));
  for (std::size_t c = 0; c < s.bank.n_classes(); ++c) {
    Matrix& p = s.bank.prototypes[c];
    out.push_back({"bank." + std::to_string(c), {p.rows(), p.cols()}, p.values()});
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_state(const TrainedState& state) {
  json header;
  header["config"] = config_snapshot(state.config);
  json history = json::array();
  for (const auto& e : state.history) {
    history.push_back({{"loss", loss_json(e.loss)}, {"train_accuracy", e.train_accuracy}});
  }
  header["history"] = history;
  header["bank"] = {{"n_classes", state.bank.n_classes()},
                    {"beta", state.bank.beta},
                    {"init_mode", to_string(state.bank.init_mode)},
                    {"renormalize", state.bank.renormalize}};
  const auto tensors = state_tensors(state);
  json manifest = json::array();
  for (const auto& t : tensors) manifest.push_back({{"name", t.name}, {"shape", t.shape}});
  header["tensors"] = manifest;

  const std::string text = header.dump();
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  for (const auto& t : tensors) w.f32s(t.data);
  return std::move(w.buffer());
}

TrainedState decode_state(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  if (!r.has(kMagic.size())) throw Error(ErrorCode::TruncatedFile, "checkpoint shorter than magic");
  if (r.bytes(kMagic.size()) != kMagic) throw Error(ErrorCode::BadMagic, "not a checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "checkpoint version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  const std::uint32_t len = r.u32();
  json header;
  try {
    header = json::parse(r.bytes(len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::HeaderMismatch, std::string("checkpoint header: ") + e.what());
  }

  TrainedState s;
  try {
    RunConfig cfg;
    for (const auto& [key, value] : header.at("config").items()) {
      set_config_value(cfg, key, value.get<std::string>());
    }
    cfg.validate();
    s.config = cfg;
    for (const auto& e : header.at("history")) {
      s.history.push_back({loss_from(e.at("loss")), e.at("train_accuracy").get<double>()});
    }
    const json& b = header.at("bank");
    s.bank.beta = b.at("beta").get<double>();
    s.bank.init_mode = parse_init_mode(b.at("init_mode").get<std::string>());
    s.bank.renormalize = b.at("renormalize").get<bool>();
    s.bank.prototypes.assign(b.at("n_classes").get<std::size_t>(), Matrix(cfg.n_proto, cfg.width));
    s.params = FusionParams::zeros(cfg.width, cfg.heads, cfg.hidden(), cfg.shared_irm, cfg.alpha);
    s.theta = TransformerBlockParams::zeros(cfg.width, cfg.heads, cfg.hidden());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::HeaderMismatch, std::string("checkpoint header: ") + e.what());
  }

  auto tensors = state_tensors(s);
  const json& manifest = header.at("tensors");
  if (manifest.size() != tensors.size()) {
    throw Error(ErrorCode::HeaderMismatch, "tensor manifest does not match the configuration");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (manifest[i].value("name", "") != tensors[i].name ||
        manifest[i].value("shape", std::vector<std::size_t>{}) != tensors[i].shape) {
      throw Error(ErrorCode::HeaderMismatch, "unexpected tensor " + manifest[i].dump());
    }
    r.f32s(tensors[i].data);
  }
  if (r.remaining() != 0) throw Error(ErrorCode::HeaderMismatch, "trailing bytes in checkpoint");
  return s;
}

void save_state(const TrainedState& state, const std::filesystem::path& path) {
  detail::write_file(path, encode_state(state));
}

TrainedState load_state(const std::filesystem::path& path) {
  return decode_state(detail::read_file(path));
}

}  // namespace spot
