#pragma once

#include <spdlog/spdlog.h>

namespace dzid {

// Routes spdlog to stderr and applies DEADZONE_IDYN_LOG={error|info|debug}.
// Idempotent. Unknown values fall back to info.
void init_logging();

}  // namespace dzid
