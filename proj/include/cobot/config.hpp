#ifndef COBOT_CONFIG_HPP
#define COBOT_CONFIG_HPP

#include <string>
#include <string_view>

#include "cobot/session.hpp"

namespace cobot {

inline constexpr int kConfigSchemaVersion = 1;

/// Parses a scenario file body. Omitted fields keep their defaults; unknown
/// fields, wrong types and a wrong schema version are ConfigErrors.
SessionConfig parseConfig(std::string_view text);
SessionConfig loadConfig(const std::string& path);

/// Full scenario file body for `cfg` (every field written).
std::string dumpConfig(const SessionConfig& cfg);

}  // namespace cobot

#endif  // COBOT_CONFIG_HPP
