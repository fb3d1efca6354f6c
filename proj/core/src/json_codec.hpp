#pragma once

// nlohmann/json conversions shared by trace and report writers. Internal.

#include "json.hpp"
#include "stepwise/config.hpp"
#include "stepwise/types.hpp"

namespace stepwise::detail {

nlohmann::json config_to_json(const SessionConfig& config);
/// Applies keys present in `j` onto `base`. Throws RangeError on bad values.
SessionConfig config_from_json(const nlohmann::json& j, SessionConfig base = {});

}  // namespace stepwise::detail
