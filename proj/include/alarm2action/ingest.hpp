#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "alarm2action/timeutil.hpp"

namespace a2a {

struct AlarmEvent {
    int turbine_id = 0;
    Timestamp time_on{};
    std::string text;

    friend bool operator==(const AlarmEvent&, const AlarmEvent&) = default;
};

struct ResponseEvent {
    int turbine_id = 0;
    Timestamp time_on{};
    std::string text;

    friend bool operator==(const ResponseEvent&, const ResponseEvent&) = default;
};

struct CleaningConfig {
    /// Characters stripped before punctuation handling (code points).
    std::u32string noise_chars = U"#*|\t";
    long chatter_window_s = 60;
    int min_response_count = 2;

    void validate() const;
};

/// Lowercases, strips noise characters and Unicode punctuation (each
/// replaced by a space), collapses whitespace runs and trims. Idempotent.
std::string clean_text(std::string_view raw, const CleaningConfig& cfg = {});

/// True for code points in the Unicode punctuation categories (Pc, Pd, Ps,
/// Pe, Pi, Pf, Po) over the Latin, General Punctuation, CJK and fullwidth
/// blocks.
bool is_unicode_punctuation(char32_t cp);

template <typename Event>
struct ParsedLog {
    std::vector<Event> events;
    /// Rows whose text became empty after cleaning.
    std::size_t empty_dropped = 0;
};

/// Reads a `time_on,text` CSV. Rows are cleaned, empty texts dropped and the
/// result stable-sorted by time. Throws MalformedRow / EmptyFile.
ParsedLog<AlarmEvent> read_alarm_log(const std::filesystem::path& path, int turbine_id,
                                     const CleaningConfig& cfg = {});
ParsedLog<ResponseEvent> read_response_log(const std::filesystem::path& path, int turbine_id,
                                           const CleaningConfig& cfg = {});

std::vector<AlarmEvent> parse_alarm_log(const std::filesystem::path& path, int turbine_id,
                                        const CleaningConfig& cfg = {});
std::vector<ResponseEvent> parse_response_log(const std::filesystem::path& path, int turbine_id,
                                              const CleaningConfig& cfg = {});

/// Suppresses chattering: within each (turbine, text) group an event is kept
/// only if it is more than `chatter_window_s` after the last kept event of
/// that group. Input must be sorted by time (UnsortedInput otherwise).
std::vector<AlarmEvent> remove_chattering(const std::vector<AlarmEvent>& events,
                                          const CleaningConfig& cfg = {});

struct FilteredResponses {
    std::vector<ResponseEvent> kept;
    std::set<std::string> dropped_labels;
};

/// Drops responses whose text occurs fewer than `min_response_count` times.
FilteredResponses filter_infrequent_responses(const std::vector<ResponseEvent>& events,
                                              const CleaningConfig& cfg = {});

/// Writes events back out in the canonical `time_on,text` CSV format.
template <typename Event>
void write_event_csv(const std::filesystem::path& path, const std::vector<Event>& events);

}  // namespace a2a
