#include "alarm2action/storage.hpp"

#include <sqlite3.h>

#include <cstdio>

#include "alarm2action/dataset_io.hpp"
#include "alarm2action/errors.hpp"

namespace a2a {

std::string to_string(RecommendationStatus s) {
    switch (s) {
        case RecommendationStatus::pending: return "pending";
        case RecommendationStatus::accepted: return "accepted";
        case RecommendationStatus::rejected: return "rejected";
        case RecommendationStatus::corrected: return "corrected";
    }
    return "pending";
}

RecommendationStatus status_from_string(const std::string& s) {
    if (s == "pending") return RecommendationStatus::pending;
    if (s == "accepted") return RecommendationStatus::accepted;
    if (s == "rejected") return RecommendationStatus::rejected;
    if (s == "corrected") return RecommendationStatus::corrected;
    throw ValidationError("unknown status '" + s + "'");
}

nlohmann::json to_json(const AlarmEvent& e) {
    return {{"turbine_id", e.turbine_id}, {"time_on", format_timestamp(e.time_on)}, {"text", e.text}};
}

nlohmann::json to_json(const Recommendation& r) {
    nlohmann::json window = nlohmann::json::array();
    for (const auto& a : r.alarm_window) window.push_back(to_json(a));
    nlohmann::json ranked = nlohmann::json::array();
    for (const auto& l : r.ranked) ranked.push_back({{"label", l.label}, {"prob", l.prob}});
    nlohmann::json next = nullptr;
    if (r.markov_next) {
        next = nlohmann::json::array();
        for (const auto& n : *r.markov_next) next.push_back({{"alarm", n.alarm}, {"prob", n.prob}});
    }
    return {{"id", r.id},
            {"turbine_id", r.turbine_id},
            {"created_at", format_timestamp(r.created_at)},
            {"alarm_window", window},
            {"ranked", ranked},
            {"markov_next", next},
            {"status", to_string(r.status)},
            {"model_version", r.model_version}};
}

Recommendation recommendation_from_json(const nlohmann::json& j) {
    Recommendation r;
    r.id = j.at("id").get<std::string>();
    r.turbine_id = j.at("turbine_id").get<int>();
    r.created_at = parse_timestamp(j.at("created_at").get<std::string>()).value();
    for (const auto& a : j.at("alarm_window")) {
        r.alarm_window.push_back({a.at("turbine_id").get<int>(), parse_timestamp(a.at("time_on").get<std::string>()).value(),
                                  a.at("text").get<std::string>()});
    }
    for (const auto& l : j.at("ranked")) r.ranked.push_back({l.at("label").get<std::string>(), l.at("prob").get<double>()});
    if (j.contains("markov_next") && !j["markov_next"].is_null()) {
        std::vector<NextAlarm> next;
        for (const auto& n : j["markov_next"]) next.push_back({n.at("alarm").get<std::string>(), n.at("prob").get<double>()});
        r.markov_next = std::move(next);
    }
    r.status = status_from_string(j.at("status").get<std::string>());
    r.model_version = j.value("model_version", 0);
    return r;
}

nlohmann::json to_json(const FeedbackRecord& f) {
    return {{"recommendation_id", f.recommendation_id},
            {"rating", f.rating},
            {"verdict", f.verdict == Verdict::accept ? "accept" : "reject"},
            {"corrected_label", f.corrected_label ? nlohmann::json(*f.corrected_label) : nlohmann::json(nullptr)},
            {"actor", f.actor},
            {"at", format_timestamp(f.at)}};
}

namespace {

std::int64_t to_epoch(Timestamp t) { return t.time_since_epoch().count(); }
Timestamp from_epoch(std::int64_t s) { return Timestamp{std::chrono::seconds{s}}; }

class Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
            throw Error("StorageError", std::string("prepare: ") + sqlite3_errmsg(db));
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Statement& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Statement& bind_null(int i) {
        check(sqlite3_bind_null(stmt_, i));
        return *this;
    }

    /// True while a row is available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw Error("StorageError", std::string("step: ") + sqlite3_errmsg(db_));
    }

    std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }
    std::string text(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
                 : std::string();
    }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw Error("StorageError", std::string("bind: ") + sqlite3_errmsg(db_));
    }

    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

/// BEGIN IMMEDIATE ... COMMIT, rolled back if the scope unwinds.
class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { run("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        run("COMMIT");
        done_ = true;
    }

private:
    void run(const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown";
            sqlite3_free(err);
            throw Error("StorageError", msg);
        }
    }
    sqlite3* db_;
    bool done_ = false;
};

std::string format_id(std::int64_t rowid) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rec-%06lld", static_cast<long long>(rowid));
    return buf;
}

std::optional<std::int64_t> parse_id(const std::string& id) {
    if (id.rfind("rec-", 0) != 0 || id.size() <= 4) return std::nullopt;
    try {
        std::size_t used = 0;
        const long long v = std::stoll(id.substr(4), &used);
        if (used != id.size() - 4 || v <= 0) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

SqliteStorage::SqliteStorage(const std::string& path) {
    if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "open failed";
        sqlite3_close(db_);
        throw Error("StorageError", msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=FULL");
    exec(R"sql(
        CREATE TABLE IF NOT EXISTS alarms (
            id INTEGER PRIMARY KEY, turbine_id INTEGER NOT NULL, time_on INTEGER NOT NULL, text TEXT NOT NULL);
        CREATE INDEX IF NOT EXISTS alarms_by_turbine ON alarms (turbine_id, time_on);
        CREATE TABLE IF NOT EXISTS recommendations (
            id INTEGER PRIMARY KEY, turbine_id INTEGER NOT NULL, created_at INTEGER NOT NULL,
            status TEXT NOT NULL, body TEXT NOT NULL, resolved_seq INTEGER);
        CREATE TABLE IF NOT EXISTS feedback (
            id INTEGER PRIMARY KEY, recommendation_id INTEGER NOT NULL, rating INTEGER NOT NULL,
            verdict TEXT NOT NULL, corrected_label TEXT, actor TEXT NOT NULL, at INTEGER NOT NULL);
        CREATE TABLE IF NOT EXISTS buffer (
            id INTEGER PRIMARY KEY, document TEXT NOT NULL, drained_by INTEGER);
        CREATE TABLE IF NOT EXISTS events (
            id INTEGER PRIMARY KEY, at INTEGER NOT NULL, kind TEXT NOT NULL, detail TEXT NOT NULL);
        CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
    )sql");
}

SqliteStorage::~SqliteStorage() { sqlite3_close(db_); }

void SqliteStorage::exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw Error("StorageError", msg);
    }
}

void SqliteStorage::insert_alarms(const std::vector<AlarmEvent>& events) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    Statement st(db_, "INSERT INTO alarms (turbine_id, time_on, text) VALUES (?, ?, ?)");
    for (const auto& e : events) {
        Statement one(db_, "INSERT INTO alarms (turbine_id, time_on, text) VALUES (?, ?, ?)");
        one.bind(1, e.turbine_id).bind(2, to_epoch(e.time_on)).bind(3, e.text);
        one.step();
    }
    tx.commit();
}

std::vector<AlarmEvent> SqliteStorage::alarms_between(int turbine, Timestamp from, Timestamp to) {
    std::lock_guard lock(mutex_);
    Statement st(db_,
                 "SELECT time_on, text FROM alarms WHERE turbine_id = ? AND time_on >= ? AND time_on <= ? "
                 "ORDER BY time_on, id");
    st.bind(1, turbine).bind(2, to_epoch(from)).bind(3, to_epoch(to));
    std::vector<AlarmEvent> out;
    while (st.step()) out.push_back({turbine, from_epoch(st.int64(0)), st.text(1)});
    return out;
}

std::optional<Timestamp> SqliteStorage::latest_alarm_time(int turbine) {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT MAX(time_on) FROM alarms WHERE turbine_id = ?");
    st.bind(1, turbine);
    if (!st.step() || st.is_null(0)) return std::nullopt;
    return from_epoch(st.int64(0));
}

std::optional<Timestamp> SqliteStorage::last_alarm_with_text(int turbine, const std::string& text, Timestamp t) {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT MAX(time_on) FROM alarms WHERE turbine_id = ? AND text = ? AND time_on <= ?");
    st.bind(1, turbine).bind(2, text).bind(3, to_epoch(t));
    if (!st.step() || st.is_null(0)) return std::nullopt;
    return from_epoch(st.int64(0));
}

void SqliteStorage::insert_recommendation(Recommendation& rec) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    {
        Statement st(db_, "INSERT INTO recommendations (turbine_id, created_at, status, body) VALUES (?, ?, ?, '{}')");
        st.bind(1, rec.turbine_id).bind(2, to_epoch(rec.created_at)).bind(3, to_string(rec.status));
        st.step();
    }
    const std::int64_t rowid = sqlite3_last_insert_rowid(db_);
    rec.id = format_id(rowid);
    {
        Statement st(db_, "UPDATE recommendations SET body = ? WHERE id = ?");
        st.bind(1, to_json(rec).dump()).bind(2, rowid);
        st.step();
    }
    tx.commit();
}

std::optional<Recommendation> SqliteStorage::get_recommendation_locked(std::int64_t rowid) {
    Statement st(db_, "SELECT body, status FROM recommendations WHERE id = ?");
    st.bind(1, rowid);
    if (!st.step()) return std::nullopt;
    auto rec = recommendation_from_json(nlohmann::json::parse(st.text(0)));
    rec.status = status_from_string(st.text(1));
    return rec;
}

std::optional<Recommendation> SqliteStorage::get_recommendation(const std::string& id) {
    auto rowid = parse_id(id);
    if (!rowid) return std::nullopt;
    std::lock_guard lock(mutex_);
    return get_recommendation_locked(*rowid);
}

std::vector<Recommendation> SqliteStorage::list_recommendations(std::optional<RecommendationStatus> status,
                                                                std::size_t limit) {
    std::lock_guard lock(mutex_);
    std::vector<Recommendation> out;
    auto collect = [&](Statement& st) {
        while (st.step()) {
            auto rec = recommendation_from_json(nlohmann::json::parse(st.text(0)));
            rec.status = status_from_string(st.text(1));
            out.push_back(std::move(rec));
        }
    };
    if (status) {
        Statement st(db_, "SELECT body, status FROM recommendations WHERE status = ? ORDER BY id DESC LIMIT ?");
        st.bind(1, to_string(*status)).bind(2, static_cast<std::int64_t>(limit));
        collect(st);
    } else {
        Statement st(db_, "SELECT body, status FROM recommendations ORDER BY id DESC LIMIT ?");
        st.bind(1, static_cast<std::int64_t>(limit));
        collect(st);
    }
    return out;
}

bool SqliteStorage::resolve(const FeedbackRecord& fb, RecommendationStatus new_status,
                            const std::optional<PairedDocument>& training_example) {
    auto rowid = parse_id(fb.recommendation_id);
    if (!rowid) return false;
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    {
        Statement st(db_,
                     "UPDATE recommendations SET status = ?, "
                     "resolved_seq = (SELECT COALESCE(MAX(resolved_seq), 0) + 1 FROM recommendations) "
                     "WHERE id = ? AND status = 'pending'");
        st.bind(1, to_string(new_status)).bind(2, *rowid);
        st.step();
        if (sqlite3_changes(db_) != 1) return false;
    }
    {
        Statement st(db_,
                     "INSERT INTO feedback (recommendation_id, rating, verdict, corrected_label, actor, at) "
                     "VALUES (?, ?, ?, ?, ?, ?)");
        st.bind(1, *rowid).bind(2, fb.rating).bind(3, fb.verdict == Verdict::accept ? "accept" : "reject");
        if (fb.corrected_label) st.bind(4, *fb.corrected_label);
        else st.bind_null(4);
        st.bind(5, fb.actor).bind(6, to_epoch(fb.at));
        st.step();
    }
    if (training_example) {
        Statement st(db_, "INSERT INTO buffer (document) VALUES (?)");
        st.bind(1, to_json(*training_example).dump());
        st.step();
    }
    tx.commit();
    return true;
}

std::vector<RecommendationStatus> SqliteStorage::recent_resolutions(std::size_t limit) {
    std::lock_guard lock(mutex_);
    Statement st(db_,
                 "SELECT status FROM recommendations WHERE resolved_seq IS NOT NULL ORDER BY resolved_seq DESC LIMIT ?");
    st.bind(1, static_cast<std::int64_t>(limit));
    std::vector<RecommendationStatus> out;
    while (st.step()) out.push_back(status_from_string(st.text(0)));
    return out;
}

std::vector<PairedDocument> SqliteStorage::buffer() {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT document FROM buffer WHERE drained_by IS NULL ORDER BY id");
    std::vector<PairedDocument> out;
    while (st.step()) out.push_back(document_from_json(nlohmann::json::parse(st.text(0))));
    return out;
}

std::size_t SqliteStorage::buffer_size() {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT COUNT(*) FROM buffer WHERE drained_by IS NULL");
    st.step();
    return static_cast<std::size_t>(st.int64(0));
}

void SqliteStorage::drain_buffer(std::size_t count, int model_version) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    Statement st(db_,
                 "UPDATE buffer SET drained_by = ? WHERE id IN "
                 "(SELECT id FROM buffer WHERE drained_by IS NULL ORDER BY id LIMIT ?)");
    st.bind(1, model_version).bind(2, static_cast<std::int64_t>(count));
    st.step();
    tx.commit();
}

void SqliteStorage::log_event(const std::string& kind, const std::string& detail) {
    std::lock_guard lock(mutex_);
    Statement st(db_, "INSERT INTO events (at, kind, detail) VALUES (?, ?, ?)");
    const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    st.bind(1, to_epoch(now)).bind(2, kind).bind(3, detail);
    st.step();
}

std::vector<std::pair<std::string, std::string>> SqliteStorage::events(std::size_t limit) {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT kind, detail FROM events ORDER BY id DESC LIMIT ?");
    st.bind(1, static_cast<std::int64_t>(limit));
    std::vector<std::pair<std::string, std::string>> out;
    while (st.step()) out.emplace_back(st.text(0), st.text(1));
    return out;
}

void SqliteStorage::set_meta(const std::string& key, const std::string& value) {
    std::lock_guard lock(mutex_);
    Statement st(db_, "INSERT INTO meta (key, value) VALUES (?, ?) ON CONFLICT(key) DO UPDATE SET value = excluded.value");
    st.bind(1, key).bind(2, value);
    st.step();
}

std::optional<std::string> SqliteStorage::get_meta(const std::string& key) {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT value FROM meta WHERE key = ?");
    st.bind(1, key);
    if (!st.step()) return std::nullopt;
    return st.text(0);
}

}  // namespace a2a
