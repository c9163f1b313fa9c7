#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "alarm2action/ingest.hpp"

namespace a2a {

struct AlarmTemplate {
    std::string text;
    /// Mean of the exponential delay after the previous alarm of the cascade.
    double mean_delay_s = 300;
};

struct FaultType {
    std::string name;
    std::string repair_label;
    std::vector<AlarmTemplate> cascade;
    /// Extra texts used to escalate a cascade into a flood; generated from
    /// the fault name when empty.
    std::vector<std::string> flood_alarms;
};

struct ScenarioSpec {
    std::vector<FaultType> fault_types;
    int n_turbines = 1;
    int days = 365;
    /// Expected faults per turbine per 30 days.
    double fault_rate = 3;
    double chatter_prob = 0;
    /// Spurious alarms per turbine per day.
    double false_alarm_rate = 0;
    std::vector<std::string> false_alarm_texts;
    /// Fraction of faults escalating to >= 10 alarms within 10 minutes.
    double flood_prob = 0;
    /// Fraction of fault occurrences whose cascade prefix is borrowed from
    /// another fault type.
    double label_ambiguity = 0;
    /// Mean hours from the last cascade alarm to the repair response.
    double response_delay_hours = 24;
    /// Responses are kept within this many days of their first cascade alarm.
    long mem_days = 20;
    Timestamp start = Timestamp{std::chrono::sys_days{std::chrono::year{2016} / 1 / 1}};
    std::uint64_t seed = 0;

    void validate() const;
};

struct TimedAlarm {
    std::string text;
    Timestamp time;
};

struct GroundTruth {
    int turbine_id = 0;
    Timestamp response_time{};
    std::string fault;
    std::string label;
    bool flood = false;
    bool ambiguous = false;
    /// The alarms this fault produced, chatter duplicates excluded.
    std::vector<TimedAlarm> cascade;
};

struct CorpusStats {
    std::size_t faults = 0;
    std::size_t alarms = 0;
    std::size_t floods = 0;
    std::size_t chatter = 0;
    std::size_t false_alarms = 0;
    std::size_t ambiguous = 0;
    /// Cascade alarms before chatter duplication.
    std::size_t cascade_alarms = 0;
};

struct Corpus {
    std::map<int, std::vector<AlarmEvent>> alarms;        // per turbine, sorted
    std::map<int, std::vector<ResponseEvent>> responses;  // per turbine, sorted
    std::vector<GroundTruth> ground_truth;
    CorpusStats stats;
};

/// Deterministic given spec.seed; turbines use derived per-turbine seeds.
/// Faults on one turbine never overlap: the next fault starts after the
/// previous repair. Throws InvalidSpec.
Corpus generate_corpus(const ScenarioSpec& spec);

/// Checks every ground-truth response against its cascade (all alarms in
/// the closed mem window, present in the turbine log) and every flood
/// against the 10-alarms-in-10-minutes rule. Returns the problems found.
std::vector<std::string> check_corpus(const Corpus& corpus, const ScenarioSpec& spec);

/// True when some 10 alarms of `alarms` fall within a 600 s span.
bool contains_flood(std::vector<Timestamp> times);

/// `n_faults` fault types with disjoint 3-5 alarm cascades, no chatter,
/// no false alarms and no ambiguity: the fault-to-cascade map is bijective.
ScenarioSpec learnable_spec(int n_faults, int n_turbines, int days, std::uint64_t seed);

/// Fault types in pairs whose cascades share a common suffix and differ only
/// in their leading alarm(s), plus background false alarms.
ScenarioSpec ambiguous_context_spec(int n_pairs, int n_turbines, int days, std::uint64_t seed);

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);

/// Writes alarms_T<k>.csv, responses_T<k>.csv and ground_truth.json.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);

}  // namespace a2a
