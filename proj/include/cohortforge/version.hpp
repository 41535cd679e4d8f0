#pragma once

namespace cohortforge {

inline constexpr const char* kToolVersion = "0.1.0";

// Version of the configuration schema accepted by load_config.
inline constexpr const char* kConfigVersion = "1";

} // namespace cohortforge
