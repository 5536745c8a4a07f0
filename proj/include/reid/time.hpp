#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace reid {

using Timestamp = std::chrono::sys_seconds;

/// ISO-8601 instant: "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds
/// and a "Z" or "+HH:MM"/"-HH:MM" suffix. Fractions are truncated.
std::optional<Timestamp> parse_utc(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_utc(Timestamp t);

Timestamp now_utc();

}  // namespace reid
