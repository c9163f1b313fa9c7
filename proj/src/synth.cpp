#include "alarm2action/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "alarm2action/errors.hpp"
#include "alarm2action/random.hpp"

namespace a2a {

namespace {

constexpr long kFloodWindowS = 600;
constexpr std::size_t kFloodMinAlarms = 10;
// Burst alarms are spread over 9 minutes so the 10-minute rule holds with margin.
constexpr double kFloodSpreadS = 540;
// Cascades longer than this are compressed proportionally.
constexpr double kMaxCascadeSpanS = 2 * 86400;

bool valid_prob(double p) { return p >= 0 && p <= 1; }

std::string flood_text(const FaultType& f, std::size_t k) {
    if (k < f.flood_alarms.size()) return f.flood_alarms[k];
    return f.name + " Flood Alarm " + std::to_string(k + 1);
}

}  // namespace

void ScenarioSpec::validate() const {
    if (fault_types.size() < 2) throw InvalidSpec("need at least 2 fault types");
    for (const auto& f : fault_types) {
        if (f.name.empty() || f.repair_label.empty()) throw InvalidSpec("fault type needs name and repair_label");
        if (f.cascade.empty()) throw InvalidSpec("fault '" + f.name + "' has an empty cascade");
        for (const auto& t : f.cascade) {
            if (t.text.empty() || !(t.mean_delay_s >= 0)) throw InvalidSpec("bad alarm template in " + f.name);
        }
    }
    if (n_turbines < 1 || days < 1) throw InvalidSpec("n_turbines and days must be >= 1");
    if (!(fault_rate >= 0) || !(false_alarm_rate >= 0) || !(response_delay_hours >= 0)) {
        throw InvalidSpec("rates must be >= 0");
    }
    if (!valid_prob(chatter_prob) || !valid_prob(flood_prob) || !valid_prob(label_ambiguity)) {
        throw InvalidSpec("probabilities must lie in [0,1]");
    }
    if (false_alarm_rate > 0 && false_alarm_texts.empty()) throw InvalidSpec("false alarms need texts");
    if (mem_days < 1) throw InvalidSpec("mem_days must be >= 1");
}

bool contains_flood(std::vector<Timestamp> times) {
    std::sort(times.begin(), times.end());
    for (std::size_t i = 0; i + kFloodMinAlarms - 1 < times.size(); ++i) {
        if (times[i + kFloodMinAlarms - 1] - times[i] <= std::chrono::seconds(kFloodWindowS)) return true;
    }
    return false;
}

Corpus generate_corpus(const ScenarioSpec& spec) {
    spec.validate();
    using std::chrono::seconds;
    Corpus corpus;
    const Timestamp end = spec.start + days_to_seconds(spec.days);
    const double mean_gap_s = spec.fault_rate > 0 ? 30.0 * 86400.0 / spec.fault_rate : 0;
    const double mem_s = static_cast<double>(spec.mem_days) * 86400.0;

    for (int turbine = 1; turbine <= spec.n_turbines; ++turbine) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(turbine)));
        std::vector<AlarmEvent> alarms;
        std::vector<ResponseEvent> responses;

        auto emit = [&](const std::string& text, Timestamp t) {
            alarms.push_back({turbine, t, text});
            if (bernoulli(rng, spec.chatter_prob)) {
                alarms.push_back({turbine, t + seconds(1 + uniform_index(rng, 59)), text});
                ++corpus.stats.chatter;
            }
        };

        Timestamp cursor = spec.start;
        while (spec.fault_rate > 0) {
            cursor += seconds(static_cast<long>(exponential(rng, mean_gap_s)));
            if (cursor >= end) break;
            const std::size_t fault_index = uniform_index(rng, spec.fault_types.size());
            const auto& fault = spec.fault_types[fault_index];

            std::vector<AlarmTemplate> cascade = fault.cascade;
            bool ambiguous = false;
            if (cascade.size() >= 2 && bernoulli(rng, spec.label_ambiguity)) {
                // Borrow the leading half of another fault's cascade.
                std::size_t other = uniform_index(rng, spec.fault_types.size() - 1);
                if (other >= fault_index) ++other;
                const auto& donor = spec.fault_types[other];
                const std::size_t prefix = std::min(cascade.size() / 2, donor.cascade.size());
                std::copy_n(donor.cascade.begin(), prefix, cascade.begin());
                ambiguous = prefix > 0;
            }

            GroundTruth gt;
            gt.turbine_id = turbine;
            gt.fault = fault.name;
            gt.label = fault.repair_label;
            gt.ambiguous = ambiguous;
            gt.flood = bernoulli(rng, spec.flood_prob);

            std::vector<std::string> texts;
            for (const auto& t : cascade) texts.push_back(t.text);
            std::vector<double> offsets;
            if (gt.flood) {
                for (std::size_t k = 0; texts.size() < kFloodMinAlarms; ++k) texts.push_back(flood_text(fault, k));
                for (std::size_t k = 0; k < texts.size(); ++k) offsets.push_back(uniform(rng, 0, kFloodSpreadS));
                std::sort(offsets.begin(), offsets.end());
                offsets.front() = 0;
            } else {
                double acc = 0;
                offsets.push_back(0);
                for (std::size_t k = 1; k < cascade.size(); ++k) {
                    acc += exponential(rng, cascade[k].mean_delay_s);
                    offsets.push_back(acc);
                }
                const double max_span = std::min(kMaxCascadeSpanS, mem_s / 2);
                if (acc > max_span) {
                    for (auto& o : offsets) o *= max_span / acc;
                }
            }
            for (std::size_t k = 0; k < texts.size(); ++k) {
                const Timestamp t = cursor + seconds(static_cast<long>(offsets[k]));
                gt.cascade.push_back({texts[k], t});
                emit(texts[k], t);
            }
            corpus.stats.cascade_alarms += texts.size();

            const double span = offsets.back();
            double delay = exponential(rng, spec.response_delay_hours * 3600.0);
            delay = std::clamp(delay, 60.0, std::max(60.0, mem_s - span - 3600.0));
            gt.response_time = gt.cascade.back().time + seconds(static_cast<long>(delay));
            // Equal timestamps are legal but keep the response strictly after
            // every cascade alarm and its chatter duplicates.
            gt.response_time = std::max(gt.response_time, gt.cascade.back().time + seconds(60));
            responses.push_back({turbine, gt.response_time, fault.repair_label});

            ++corpus.stats.faults;
            corpus.stats.floods += gt.flood ? 1 : 0;
            corpus.stats.ambiguous += gt.ambiguous ? 1 : 0;
            cursor = gt.response_time;
            corpus.ground_truth.push_back(std::move(gt));
        }

        if (spec.false_alarm_rate > 0) {
            for (int d = 0; d < spec.days; ++d) {
                const long n = poisson(rng, spec.false_alarm_rate);
                for (long k = 0; k < n; ++k) {
                    const Timestamp t = spec.start + days_to_seconds(d) + seconds(uniform_index(rng, 86400));
                    const auto& text = spec.false_alarm_texts[uniform_index(rng, spec.false_alarm_texts.size())];
                    emit(text, t);
                    ++corpus.stats.false_alarms;
                }
            }
        }

        std::stable_sort(alarms.begin(), alarms.end(),
                         [](const AlarmEvent& a, const AlarmEvent& b) { return a.time_on < b.time_on; });
        corpus.stats.alarms += alarms.size();
        corpus.alarms[turbine] = std::move(alarms);
        corpus.responses[turbine] = std::move(responses);
    }
    return corpus;
}

std::vector<std::string> check_corpus(const Corpus& corpus, const ScenarioSpec& spec) {
    std::vector<std::string> problems;
    const auto mem = days_to_seconds(spec.mem_days);
    for (std::size_t g = 0; g < corpus.ground_truth.size(); ++g) {
        const auto& gt = corpus.ground_truth[g];
        const std::string where = "ground truth #" + std::to_string(g);
        auto a_it = corpus.alarms.find(gt.turbine_id);
        auto r_it = corpus.responses.find(gt.turbine_id);
        if (a_it == corpus.alarms.end() || r_it == corpus.responses.end()) {
            problems.push_back(where + ": turbine missing");
            continue;
        }
        const bool has_response = std::any_of(r_it->second.begin(), r_it->second.end(), [&](const ResponseEvent& r) {
            return r.time_on == gt.response_time && r.text == gt.label;
        });
        if (!has_response) problems.push_back(where + ": response not in log");
        for (const auto& c : gt.cascade) {
            if (c.time > gt.response_time || gt.response_time - c.time > mem) {
                problems.push_back(where + ": cascade alarm '" + c.text + "' outside window");
            }
            const bool logged = std::any_of(a_it->second.begin(), a_it->second.end(), [&](const AlarmEvent& a) {
                return a.time_on == c.time && a.text == c.text;
            });
            if (!logged) problems.push_back(where + ": cascade alarm '" + c.text + "' not in log");
        }
        if (gt.flood) {
            std::vector<Timestamp> times;
            for (const auto& c : gt.cascade) times.push_back(c.time);
            if (!contains_flood(times)) problems.push_back(where + ": flood below 10 alarms in 10 minutes");
        }
    }
    return problems;
}

namespace {

const std::vector<std::string> kComponents = {
    "Pitch System", "Gearbox",      "Generator", "Yaw Drive",   "Converter",   "Main Bearing",
    "Hydraulic Unit", "Transformer", "Anemometer", "Blade",       "Cooling Pump", "Brake",
    "Tower",        "Nacelle",      "Slip Ring", "Grid Monitor"};
const std::vector<std::string> kSymptoms = {
    "Temperature High", "Pressure Low",  "Vibration High", "Communication Lost", "Overspeed", "Voltage Dip",
    "Current Imbalance", "Oil Level Low", "Position Error", "Sensor Fault",       "Timeout",   "Overload"};
const std::vector<std::string> kActions = {"Replace", "Inspect", "Reset", "Repair", "Recalibrate", "Lubricate"};

std::string component_name(int f) {
    const auto nc = static_cast<int>(kComponents.size());
    std::string name = kComponents[static_cast<std::size_t>(f % nc)];
    if (f >= nc) name += " Unit " + std::to_string(f / nc + 1);
    return name;
}

std::vector<std::string> default_false_alarms() {
    return {"Scada Heartbeat Missed", "Door Open", "Ambient Sensor Spike", "Ups Self Test", "Lightning Counter"};
}

}  // namespace

ScenarioSpec learnable_spec(int n_faults, int n_turbines, int days, std::uint64_t seed) {
    ScenarioSpec s;
    for (int f = 0; f < n_faults; ++f) {
        FaultType ft;
        const std::string comp = component_name(f);
        ft.name = "fault_" + std::to_string(f);
        ft.repair_label = kActions[static_cast<std::size_t>(f) % kActions.size()] + " " + comp;
        const int len = 3 + f % 3;
        for (int k = 0; k < len; ++k) {
            ft.cascade.push_back({comp + " " + kSymptoms[static_cast<std::size_t>(k + f) % kSymptoms.size()], 300});
        }
        s.fault_types.push_back(std::move(ft));
    }
    s.n_turbines = n_turbines;
    s.days = days;
    s.seed = seed;
    return s;
}

ScenarioSpec ambiguous_context_spec(int n_pairs, int n_turbines, int days, std::uint64_t seed) {
    ScenarioSpec s;
    for (int p = 0; p < n_pairs; ++p) {
        const std::string comp = component_name(p);
        std::vector<AlarmTemplate> suffix;
        for (int k = 0; k < 4; ++k) {
            suffix.push_back({comp + " " + kSymptoms[static_cast<std::size_t>(2 + k + p) % kSymptoms.size()], 300});
        }
        for (int side = 0; side < 2; ++side) {
            FaultType ft;
            ft.name = "pair_" + std::to_string(p) + (side == 0 ? "_a" : "_b");
            ft.repair_label = kActions[static_cast<std::size_t>(2 * p + side) % kActions.size()] + " " + comp +
                              (side == 0 ? " Sensor" : " Actuator");
            ft.cascade.push_back({comp + (side == 0 ? " Sensor" : " Actuator") + " Warning", 300});
            ft.cascade.insert(ft.cascade.end(), suffix.begin(), suffix.end());
            s.fault_types.push_back(std::move(ft));
        }
    }
    s.n_turbines = n_turbines;
    s.days = days;
    s.seed = seed;
    s.false_alarm_rate = 1.0;
    s.false_alarm_texts = default_false_alarms();
    return s;
}

nlohmann::json to_json(const ScenarioSpec& spec) {
    nlohmann::json faults = nlohmann::json::array();
    for (const auto& f : spec.fault_types) {
        nlohmann::json cascade = nlohmann::json::array();
        for (const auto& t : f.cascade) cascade.push_back({{"text", t.text}, {"mean_delay_s", t.mean_delay_s}});
        faults.push_back({{"name", f.name},
                          {"repair_label", f.repair_label},
                          {"cascade", cascade},
                          {"flood_alarms", f.flood_alarms}});
    }
    return {{"fault_types", faults},
            {"n_turbines", spec.n_turbines},
            {"days", spec.days},
            {"fault_rate", spec.fault_rate},
            {"chatter_prob", spec.chatter_prob},
            {"false_alarm_rate", spec.false_alarm_rate},
            {"false_alarm_texts", spec.false_alarm_texts},
            {"flood_prob", spec.flood_prob},
            {"label_ambiguity", spec.label_ambiguity},
            {"response_delay_hours", spec.response_delay_hours},
            {"mem_days", spec.mem_days},
            {"start", format_timestamp(spec.start)},
            {"seed", spec.seed}};
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    try {
        ScenarioSpec s;
        for (const auto& f : j.at("fault_types")) {
            FaultType ft;
            ft.name = f.at("name").get<std::string>();
            ft.repair_label = f.at("repair_label").get<std::string>();
            for (const auto& t : f.at("cascade")) {
                ft.cascade.push_back({t.at("text").get<std::string>(), t.value("mean_delay_s", 300.0)});
            }
            ft.flood_alarms = f.value("flood_alarms", std::vector<std::string>{});
            s.fault_types.push_back(std::move(ft));
        }
        s.n_turbines = j.value("n_turbines", s.n_turbines);
        s.days = j.value("days", s.days);
        s.fault_rate = j.value("fault_rate", s.fault_rate);
        s.chatter_prob = j.value("chatter_prob", s.chatter_prob);
        s.false_alarm_rate = j.value("false_alarm_rate", s.false_alarm_rate);
        s.false_alarm_texts = j.value("false_alarm_texts", s.false_alarm_texts);
        s.flood_prob = j.value("flood_prob", s.flood_prob);
        s.label_ambiguity = j.value("label_ambiguity", s.label_ambiguity);
        s.response_delay_hours = j.value("response_delay_hours", s.response_delay_hours);
        s.mem_days = j.value("mem_days", s.mem_days);
        if (j.contains("start")) {
            auto t = parse_timestamp(j["start"].get<std::string>());
            if (!t) throw InvalidSpec("bad start timestamp");
            s.start = *t;
        }
        s.seed = j.value("seed", s.seed);
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(e.what());
    }
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
    std::filesystem::create_directories(dir);
    for (const auto& [t, alarms] : corpus.alarms) {
        write_event_csv(dir / ("alarms_T" + std::to_string(t) + ".csv"), alarms);
    }
    for (const auto& [t, responses] : corpus.responses) {
        write_event_csv(dir / ("responses_T" + std::to_string(t) + ".csv"), responses);
    }
    nlohmann::json gt = nlohmann::json::array();
    for (const auto& g : corpus.ground_truth) {
        nlohmann::json cascade = nlohmann::json::array();
        for (const auto& c : g.cascade) cascade.push_back({{"text", c.text}, {"time", format_timestamp(c.time)}});
        gt.push_back({{"turbine_id", g.turbine_id},
                      {"response_time", format_timestamp(g.response_time)},
                      {"fault", g.fault},
                      {"label", g.label},
                      {"flood", g.flood},
                      {"ambiguous", g.ambiguous},
                      {"cascade", cascade}});
    }
    nlohmann::json out{{"ground_truth", gt},
                       {"stats",
                        {{"faults", corpus.stats.faults},
                         {"alarms", corpus.stats.alarms},
                         {"floods", corpus.stats.floods},
                         {"chatter", corpus.stats.chatter},
                         {"false_alarms", corpus.stats.false_alarms},
                         {"ambiguous", corpus.stats.ambiguous}}}};
    std::ofstream f(dir / "ground_truth.json");
    if (!f) throw Error("IoError", "cannot write ground_truth.json");
    f << out.dump(2) << '\n';
}

}  // namespace a2a
