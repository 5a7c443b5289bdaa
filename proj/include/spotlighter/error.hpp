// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spot {

enum class ErrorCode {
  ZeroVector,
  DimMismatch,
  NonPositiveTemperature,
  NotADistribution,
  NonFiniteLoss,
  InvalidArgument,
  InvalidSpec,
  InvalidK,
  KOutOfRange,
  LabelOutOfRange,
  EmptySelection,
  EmptySplit,
  WorkloadTooSmall,
  BadMagic,
  TruncatedFile,
  HeaderMismatch,
  VersionMismatch,
  Io,
  Config,
};

std::string_view error_name(ErrorCode code);

/// Process exit status for an error: 1 usage/config, 2 data, 3 numeric.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spot
