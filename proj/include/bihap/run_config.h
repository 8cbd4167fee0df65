#pragma once

/// @file
///
/// Per-subcommand parameter sets read from --config files and echoed next
/// to every run's outputs.

#include <string>

#include "bihap/config_error.h"
#include "bihap/net/live_operator.h"
#include "bihap/teleop.h"

namespace bihap {

enum class OperatorKind : uint8_t { kScripted, kLive };

const char* ToString(OperatorKind kind);
OperatorKind ParseOperatorKind(const std::string& text);

struct PlayConfig {
  teleop::SessionConfig session;
  OperatorKind operator_kind = OperatorKind::kScripted;
  teleop::OperatorParams scripted;
  net::LiveLinkConfig live;

  void Validate() const;
};

}  // namespace bihap
