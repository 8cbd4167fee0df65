#include "bihap/run_config.h"

#include <cmath>
#include <stdexcept>

namespace bihap {

const char* ToString(OperatorKind kind) {
  return kind == OperatorKind::kScripted ? "scripted" : "live";
}

OperatorKind ParseOperatorKind(const std::string& text) {
  if (text == "scripted") { return OperatorKind::kScripted; }
  if (text == "live") { return OperatorKind::kLive; }
  throw std::invalid_argument("unknown operator '" + text + "' (scripted|live)");
}

void PlayConfig::Validate() const {
  FieldChecker c("play config");
  c.Nested("session", [this] { session.Validate(); });
  c.Nested("scripted", [this] { scripted.Validate(); });
  c.Check(live.connect_timeout_s > 0.0, "live.connect_timeout_s");
  c.Check(live.heartbeat_period_s > 0.0, "live.heartbeat_period_s");
  c.Check(live.input_stale_s > 0.0, "live.input_stale_s");
  c.Check(live.gateway_timeout_s > live.heartbeat_period_s, "live.gateway_timeout_s");
  c.ThrowIfAny();
}

}  // namespace bihap
