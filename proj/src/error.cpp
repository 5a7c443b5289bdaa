// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/error.hpp"

namespace spot {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::NotADistribution: return "NotADistribution";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::WorkloadTooSmall: return "WorkloadTooSmall";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidSpec:
    case ErrorCode::InvalidK:
    case ErrorCode::KOutOfRange:
    case ErrorCode::WorkloadTooSmall:
      return 1;
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::HeaderMismatch:
    case ErrorCode::VersionMismatch:
    case ErrorCode::Io:
    case ErrorCode::DimMismatch:
    case ErrorCode::LabelOutOfRange:
    case ErrorCode::EmptySplit:
    case ErrorCode::EmptySelection:
      return 2;
    case ErrorCode::ZeroVector:
    case ErrorCode::NonPositiveTemperature:
    case ErrorCode::NotADistribution:
    case ErrorCode::NonFiniteLoss:
      return 3;
  }
  return 1;
}

}  // namespace spot
