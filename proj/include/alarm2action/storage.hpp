#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alarm2action/ingest.hpp"
#include "alarm2action/sequencer.hpp"

struct sqlite3;

namespace a2a {

enum class RecommendationStatus { pending, accepted, rejected, corrected };
std::string to_string(RecommendationStatus s);
RecommendationStatus status_from_string(const std::string& s);

struct RankedLabel {
    std::string label;
    double prob = 0;
};

struct NextAlarm {
    std::string alarm;
    double prob = 0;
};

struct Recommendation {
    std::string id;
    int turbine_id = 0;
    Timestamp created_at{};
    std::vector<AlarmEvent> alarm_window;
    std::vector<RankedLabel> ranked;
    std::optional<std::vector<NextAlarm>> markov_next;
    RecommendationStatus status = RecommendationStatus::pending;
    int model_version = 0;
};

enum class Verdict { accept, reject };

struct FeedbackRecord {
    std::string recommendation_id;
    int rating = 0;
    Verdict verdict = Verdict::accept;
    std::optional<std::string> corrected_label;
    std::string actor;
    Timestamp at{};
};

/// JSON mirrors of the service types (timestamps RFC 3339).
nlohmann::json to_json(const AlarmEvent& e);
nlohmann::json to_json(const Recommendation& r);
Recommendation recommendation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeedbackRecord& f);

/// Persistence behind the service. Implementations must make every
/// mutating call atomic.
class Storage {
public:
    virtual ~Storage() = default;

    virtual void insert_alarms(const std::vector<AlarmEvent>& events) = 0;
    /// Alarms of `turbine` with time in [from, to], ascending.
    virtual std::vector<AlarmEvent> alarms_between(int turbine, Timestamp from, Timestamp to) = 0;
    virtual std::optional<Timestamp> latest_alarm_time(int turbine) = 0;
    /// Most recent stored alarm of `turbine` with `text` at or before `t`.
    virtual std::optional<Timestamp> last_alarm_with_text(int turbine, const std::string& text, Timestamp t) = 0;

    /// Assigns `rec.id` and persists it.
    virtual void insert_recommendation(Recommendation& rec) = 0;
    virtual std::optional<Recommendation> get_recommendation(const std::string& id) = 0;
    virtual std::vector<Recommendation> list_recommendations(std::optional<RecommendationStatus> status,
                                                             std::size_t limit) = 0;

    /// In one transaction: set the status, record the feedback, and append
    /// `training_example` to the retraining buffer when given. Returns false
    /// (and changes nothing) unless the recommendation is still pending.
    virtual bool resolve(const FeedbackRecord& fb, RecommendationStatus new_status,
                         const std::optional<PairedDocument>& training_example) = 0;

    /// Statuses of the most recently resolved recommendations, newest first.
    virtual std::vector<RecommendationStatus> recent_resolutions(std::size_t limit) = 0;

    virtual std::vector<PairedDocument> buffer() = 0;
    virtual std::size_t buffer_size() = 0;
    /// Marks the first `count` undrained buffer entries as consumed by `model_version`.
    virtual void drain_buffer(std::size_t count, int model_version) = 0;

    virtual void log_event(const std::string& kind, const std::string& detail) = 0;
    virtual std::vector<std::pair<std::string, std::string>> events(std::size_t limit) = 0;

    virtual void set_meta(const std::string& key, const std::string& value) = 0;
    virtual std::optional<std::string> get_meta(const std::string& key) = 0;
};

/// SQLite-backed storage. ":memory:" gives a private in-memory database.
class SqliteStorage final : public Storage {
public:
    explicit SqliteStorage(const std::string& path);
    ~SqliteStorage() override;
    SqliteStorage(const SqliteStorage&) = delete;
    SqliteStorage& operator=(const SqliteStorage&) = delete;

    void insert_alarms(const std::vector<AlarmEvent>& events) override;
    std::vector<AlarmEvent> alarms_between(int turbine, Timestamp from, Timestamp to) override;
    std::optional<Timestamp> latest_alarm_time(int turbine) override;
    std::optional<Timestamp> last_alarm_with_text(int turbine, const std::string& text, Timestamp t) override;
    void insert_recommendation(Recommendation& rec) override;
    std::optional<Recommendation> get_recommendation(const std::string& id) override;
    std::vector<Recommendation> list_recommendations(std::optional<RecommendationStatus> status,
                                                     std::size_t limit) override;
    bool resolve(const FeedbackRecord& fb, RecommendationStatus new_status,
                 const std::optional<PairedDocument>& training_example) override;
    std::vector<RecommendationStatus> recent_resolutions(std::size_t limit) override;
    std::vector<PairedDocument> buffer() override;
    std::size_t buffer_size() override;
    void drain_buffer(std::size_t count, int model_version) override;
    void log_event(const std::string& kind, const std::string& detail) override;
    std::vector<std::pair<std::string, std::string>> events(std::size_t limit) override;
    void set_meta(const std::string& key, const std::string& value) override;
    std::optional<std::string> get_meta(const std::string& key) override;

private:
    void exec(const char* sql);
    std::optional<Recommendation> get_recommendation_locked(std::int64_t rowid);

    sqlite3* db_ = nullptr;
    std::mutex mutex_;
};

}  // namespace a2a
