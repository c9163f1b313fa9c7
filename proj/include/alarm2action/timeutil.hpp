#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace a2a {

using Timestamp = std::chrono::sys_seconds;

/// Parses an RFC 3339 / ISO 8601 timestamp with second precision.
///
/// Accepted: `YYYY-MM-DDTHH:MM:SS` (or a single space instead of `T`),
/// optionally followed by `Z` or a `+HH:MM` / `-HH:MM` offset. Offsets are
/// folded into UTC. Partial dates, out-of-range fields (month 13, Feb 30,
/// hour 24) and trailing garbage are rejected with std::nullopt.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(Timestamp t);

inline constexpr std::chrono::seconds days_to_seconds(long days) {
    return std::chrono::seconds(days * 86400L);
}

}  // namespace a2a
