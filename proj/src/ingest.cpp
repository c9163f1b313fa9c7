#include "alarm2action/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include "alarm2action/csv.hpp"
#include "alarm2action/errors.hpp"

namespace a2a {

void CleaningConfig::validate() const {
    if (chatter_window_s <= 0) throw InvalidArgument("chatter_window_s must be > 0");
    if (min_response_count < 1) throw InvalidArgument("min_response_count must be >= 1");
}

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point starting at s[i]; advances i. Malformed sequences
// yield kInvalid and consume a single byte.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return kInvalid;
    }
    if (i + len > s.size()) {
        ++i;
        return kInvalid;
    }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return kInvalid;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    i += len;
    return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_space(char32_t cp) {
    return cp == ' ' || (cp >= 0x09 && cp <= 0x0D) || cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200A) ||
           cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    // Latin-1 uppercase letters, skipping U+00D7 (multiplication sign).
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    return cp;
}

}  // namespace

bool is_unicode_punctuation(char32_t cp) {
    if (cp < 0x80) {
        switch (cp) {
            case '!': case '"': case '#': case '%': case '&': case '\'': case '(': case ')':
            case '*': case ',': case '-': case '.': case '/': case ':': case ';': case '?':
            case '@': case '[': case '\\': case ']': case '_': case '{': case '}':
                return true;
            default:
                return false;
        }
    }
    switch (cp) {
        case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
        case 0x37E: case 0x387:
            return true;
        default:
            break;
    }
    if (cp >= 0x2010 && cp <= 0x2027) return true;
    if (cp >= 0x2030 && cp <= 0x205E && cp != 0x2044 && cp != 0x2052) return true;
    if (cp >= 0x3001 && cp <= 0x3003) return true;
    if (cp >= 0x3008 && cp <= 0x3011) return true;
    if (cp >= 0x3014 && cp <= 0x301F) return true;
    if (cp >= 0xFF01 && cp <= 0xFF0F && cp != 0xFF04 && cp != 0xFF0B) return true;
    if (cp == 0xFF1A || cp == 0xFF1B || cp == 0xFF1F || cp == 0xFF20) return true;
    if (cp >= 0xFF3B && cp <= 0xFF3D) return true;
    if (cp == 0xFF3F || cp == 0xFF5B || cp == 0xFF5D) return true;
    return false;
}

std::string clean_text(std::string_view raw, const CleaningConfig& cfg) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < raw.size()) {
        const std::size_t start = i;
        char32_t cp = decode_utf8(raw, i);
        const bool noise = cfg.noise_chars.find(cp) != std::u32string::npos;
        if (noise || is_space(cp) || (cp != kInvalid && is_unicode_punctuation(cp))) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        if (cp == kInvalid) {
            out.append(raw.substr(start, i - start));
        } else {
            encode_utf8(to_lower(cp), out);
        }
    }
    return out;
}

namespace {

template <typename Event>
ParsedLog<Event> read_log(const std::filesystem::path& path, int turbine_id, const CleaningConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    auto records = csv::read_all(in);
    if (records.empty()) throw EmptyFile(path.string() + ": no header");

    const auto& header = records.front().fields;
    int time_col = -1, text_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string name = clean_text(header[c]);
        // The UTF-8 BOM some spreadsheet exports prepend is not punctuation.
        if (name.rfind("\xEF\xBB\xBF", 0) == 0) name.erase(0, 3);
        if (name == "time on") time_col = static_cast<int>(c);
        if (name == "text") text_col = static_cast<int>(c);
    }
    if (time_col < 0 || text_col < 0) {
        throw MalformedRow(records.front().line_no, "header must contain time_on,text");
    }

    ParsedLog<Event> result;
    std::size_t data_rows = 0;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        ++data_rows;
        const auto needed = static_cast<std::size_t>(std::max(time_col, text_col)) + 1;
        if (rec.fields.size() < needed) throw MalformedRow(rec.line_no, "missing column");
        auto t = parse_timestamp(rec.fields[time_col]);
        if (!t) throw MalformedRow(rec.line_no, "unparseable timestamp '" + rec.fields[time_col] + "'");
        std::string text = clean_text(rec.fields[text_col], cfg);
        if (text.empty()) {
            ++result.empty_dropped;
            continue;
        }
        result.events.push_back(Event{turbine_id, *t, std::move(text)});
    }
    if (data_rows == 0) throw EmptyFile(path.string() + ": zero data rows");
    std::stable_sort(result.events.begin(), result.events.end(),
                     [](const Event& a, const Event& b) { return a.time_on < b.time_on; });
    return result;
}

}  // namespace

ParsedLog<AlarmEvent> read_alarm_log(const std::filesystem::path& path, int turbine_id,
                                     const CleaningConfig& cfg) {
    return read_log<AlarmEvent>(path, turbine_id, cfg);
}

ParsedLog<ResponseEvent> read_response_log(const std::filesystem::path& path, int turbine_id,
                                           const CleaningConfig& cfg) {
    return read_log<ResponseEvent>(path, turbine_id, cfg);
}

std::vector<AlarmEvent> parse_alarm_log(const std::filesystem::path& path, int turbine_id,
                                        const CleaningConfig& cfg) {
    return read_alarm_log(path, turbine_id, cfg).events;
}

std::vector<ResponseEvent> parse_response_log(const std::filesystem::path& path, int turbine_id,
                                              const CleaningConfig& cfg) {
    return read_response_log(path, turbine_id, cfg).events;
}

std::vector<AlarmEvent> remove_chattering(const std::vector<AlarmEvent>& events, const CleaningConfig& cfg) {
    cfg.validate();
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].time_on < events[i - 1].time_on) {
            throw UnsortedInput("event " + std::to_string(i) + " precedes its predecessor");
        }
    }
    const std::chrono::seconds window{cfg.chatter_window_s};
    std::map<std::pair<int, std::string_view>, Timestamp> last_kept;
    std::vector<AlarmEvent> out;
    out.reserve(events.size());
    for (const auto& e : events) {
        auto key = std::make_pair(e.turbine_id, std::string_view(e.text));
        auto it = last_kept.find(key);
        if (it != last_kept.end() && e.time_on - it->second <= window) continue;
        last_kept[key] = e.time_on;
        out.push_back(e);
    }
    return out;
}

FilteredResponses filter_infrequent_responses(const std::vector<ResponseEvent>& events,
                                              const CleaningConfig& cfg) {
    cfg.validate();
    std::unordered_map<std::string, int> counts;
    for (const auto& e : events) ++counts[e.text];
    FilteredResponses out;
    for (const auto& e : events) {
        if (counts[e.text] >= cfg.min_response_count) {
            out.kept.push_back(e);
        } else {
            out.dropped_labels.insert(e.text);
        }
    }
    return out;
}

template <typename Event>
void write_event_csv(const std::filesystem::path& path, const std::vector<Event>& events) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    csv::write_record(out, {"time_on", "text"});
    for (const auto& e : events) csv::write_record(out, {format_timestamp(e.time_on), e.text});
}

template void write_event_csv<AlarmEvent>(const std::filesystem::path&, const std::vector<AlarmEvent>&);
template void write_event_csv<ResponseEvent>(const std::filesystem::path&, const std::vector<ResponseEvent>&);

}  // namespace a2a
