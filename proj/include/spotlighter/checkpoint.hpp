// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spotlighter/pipeline.hpp"

namespace spot {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "SPOTCKPT", u32 version, u32 JSON length, JSON (config snapshot, history,
/// bank settings, tensor manifest), then every manifest tensor as LE binary32.
std::vector<std::uint8_t> encode_state(const TrainedState& state);
TrainedState decode_state(const std::vector<std::uint8_t>& bytes);

void save_state(const TrainedState& state, const std::filesystem::path& path);
TrainedState load_state(const std::filesystem::path& path);

}  // namespace spot
