#include "alarm2action/service.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "alarm2action/checkpoint.hpp"
#include "alarm2action/dataset_io.hpp"
#include "alarm2action/errors.hpp"
#include "alarm2action/random.hpp"

namespace a2a {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Timestamp now_seconds() { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); }

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
    }
}

std::filesystem::path resolve_path(const json& j, const char* key, const std::filesystem::path& base) {
    if (!j.contains(key) || j[key].is_null()) return {};
    std::filesystem::path p = j[key].get<std::string>();
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double val_accuracy(const ModelParams& params, const ModelConfig& cfg, const Vocabulary& vocab,
                    const std::vector<PairedDocument>& validation, std::size_t threads) {
    if (validation.empty()) return kNaN;
    EvalOptions opts;
    opts.threads = threads;
    return evaluate(params, cfg, validation, vocab, opts).accuracy.value_or(kNaN);
}

}  // namespace

void RetrainPolicy::validate() const {
    if (rating_threshold < 1 || rating_threshold > 6) throw ValidationError("rating_threshold must be in [1, 6]");
    if (!(acceptance_target >= 0.0 && acceptance_target <= 1.0))
        throw ValidationError("acceptance_target must be in [0, 1]");
    if (accept_window < 1) throw ValidationError("accept_window must be >= 1");
}

void ServiceConfig::validate() const {
    policy.validate();
    train.validate();
    sequencer.validate();
    cleaning.validate();
    if (top_k < 1) throw ValidationError("top_k must be >= 1");
    if (markov_alpha < 0) throw ValidationError("markov_alpha must be >= 0");
    if (port < 0 || port > 65535) throw ValidationError("port out of range");
}

ServiceConfig service_config_from_json(const json& j, const std::filesystem::path& base) {
    reject_unknown_keys(j,
                        {"model", "vocab", "markov", "dataset", "split", "model_dir", "db", "policy", "train",
                         "sequencer", "top_k", "markov_k", "markov_alpha", "chatter_window_s", "bind", "port",
                         "api_token", "static_dir"},
                        "service config");
    ServiceConfig cfg;
    cfg.model_path = resolve_path(j, "model", base);
    cfg.vocab_path = resolve_path(j, "vocab", base);
    cfg.markov_path = resolve_path(j, "markov", base);
    cfg.dataset_path = resolve_path(j, "dataset", base);
    cfg.split_path = resolve_path(j, "split", base);
    cfg.model_dir = resolve_path(j, "model_dir", base);
    cfg.static_dir = resolve_path(j, "static_dir", base);
    if (j.contains("db")) {
        const auto db = j["db"].get<std::string>();
        cfg.db_path = db == ":memory:" ? db : resolve_path(j, "db", base).string();
    }
    if (j.contains("policy")) {
        const auto& p = j["policy"];
        reject_unknown_keys(p, {"rating_threshold", "min_new_examples", "acceptance_target", "accept_window"},
                            "policy");
        cfg.policy.rating_threshold = p.value("rating_threshold", cfg.policy.rating_threshold);
        cfg.policy.min_new_examples = p.value("min_new_examples", cfg.policy.min_new_examples);
        cfg.policy.acceptance_target = p.value("acceptance_target", cfg.policy.acceptance_target);
        cfg.policy.accept_window = p.value("accept_window", cfg.policy.accept_window);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        reject_unknown_keys(t, {"epochs", "lr", "clip", "batch_size", "seed", "threads"}, "train");
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.lr = t.value("lr", cfg.train.lr);
        cfg.train.clip_threshold = t.value("clip", cfg.train.clip_threshold);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.seed = t.value("seed", cfg.train.seed);
        cfg.train.threads = t.value("threads", cfg.train.threads);
    }
    if (j.contains("sequencer")) {
        const auto& s = j["sequencer"];
        reject_unknown_keys(s, {"mem_days", "target_len"}, "sequencer");
        cfg.sequencer.mem_days = s.value("mem_days", cfg.sequencer.mem_days);
        cfg.sequencer.target_len = s.value("target_len", cfg.sequencer.target_len);
    }
    cfg.top_k = j.value("top_k", cfg.top_k);
    cfg.markov_k = j.value("markov_k", cfg.markov_k);
    cfg.markov_alpha = j.value("markov_alpha", cfg.markov_alpha);
    cfg.cleaning.chatter_window_s = j.value("chatter_window_s", cfg.cleaning.chatter_window_s);
    cfg.bind = j.value("bind", cfg.bind);
    cfg.port = j.value("port", cfg.port);
    cfg.api_token = j.value("api_token", cfg.api_token);
    cfg.validate();
    return cfg;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return service_config_from_json(j, path.parent_path());
}

json to_json(const ServiceConfig& c) {
    return {{"model", c.model_path.string()},
            {"vocab", c.vocab_path.string()},
            {"markov", c.markov_path.string()},
            {"dataset", c.dataset_path.string()},
            {"split", c.split_path.string()},
            {"model_dir", c.model_dir.string()},
            {"db", c.db_path},
            {"policy",
             {{"rating_threshold", c.policy.rating_threshold},
              {"min_new_examples", c.policy.min_new_examples},
              {"acceptance_target", c.policy.acceptance_target},
              {"accept_window", c.policy.accept_window}}},
            {"train",
             {{"epochs", c.train.epochs},
              {"lr", c.train.lr},
              {"clip", c.train.clip_threshold},
              {"batch_size", c.train.batch_size},
              {"seed", c.train.seed},
              {"threads", c.train.threads}}},
            {"sequencer", {{"mem_days", c.sequencer.mem_days}, {"target_len", c.sequencer.target_len}}},
            {"top_k", c.top_k},
            {"markov_k", c.markov_k},
            {"markov_alpha", c.markov_alpha},
            {"chatter_window_s", c.cleaning.chatter_window_s},
            {"bind", c.bind},
            {"port", c.port},
            {"api_token", c.api_token},
            {"static_dir", c.static_dir.string()}};
}

void apply_env_overrides(ServiceConfig& cfg, const std::function<std::optional<std::string>(const char*)>& getenv) {
    auto get = [&](const char* name) -> std::optional<std::string> {
        if (getenv) return getenv(name);
        const char* v = std::getenv(name);
        return v ? std::optional<std::string>(v) : std::nullopt;
    };
    auto number = [](const std::string& name, const std::string& v, auto parse) {
        try {
            std::size_t used = 0;
            auto out = parse(v, &used);
            if (used != v.size()) throw std::invalid_argument("trailing");
            return out;
        } catch (const std::exception&) {
            throw ValidationError("bad value for " + name + ": '" + v + "'");
        }
    };
    auto to_int = [](const std::string& s, std::size_t* used) { return std::stoi(s, used); };
    auto to_double = [](const std::string& s, std::size_t* used) { return std::stod(s, used); };

    if (auto v = get("A2A_BIND")) cfg.bind = *v;
    if (auto v = get("A2A_PORT")) cfg.port = number("A2A_PORT", *v, to_int);
    if (auto v = get("A2A_MODEL")) cfg.model_path = *v;
    if (auto v = get("A2A_VOCAB")) cfg.vocab_path = *v;
    if (auto v = get("A2A_MARKOV")) cfg.markov_path = *v;
    if (auto v = get("A2A_DB")) cfg.db_path = *v;
    if (auto v = get("A2A_API_TOKEN")) cfg.api_token = *v;
    if (auto v = get("A2A_STATIC_DIR")) cfg.static_dir = *v;
    if (auto v = get("A2A_RATING_THRESHOLD"))
        cfg.policy.rating_threshold = number("A2A_RATING_THRESHOLD", *v, to_int);
    if (auto v = get("A2A_MIN_NEW_EXAMPLES")) {
        const int n = number("A2A_MIN_NEW_EXAMPLES", *v, to_int);
        if (n < 0) throw ValidationError("A2A_MIN_NEW_EXAMPLES must be >= 0");
        cfg.policy.min_new_examples = static_cast<std::size_t>(n);
    }
    if (auto v = get("A2A_ACCEPTANCE_TARGET"))
        cfg.policy.acceptance_target = number("A2A_ACCEPTANCE_TARGET", *v, to_double);
    cfg.validate();
}

std::shared_ptr<const ModelBundle> load_bundle(const std::filesystem::path& model_path,
                                               const std::filesystem::path& vocab_path,
                                               const std::filesystem::path& markov_path, int version) {
    auto [vocab, dim] = load_vocab_json(vocab_path);
    auto ckpt = load_model(model_path, vocab.hash());
    auto bundle = std::make_shared<ModelBundle>();
    bundle->version = version;
    bundle->config = ckpt.config;
    bundle->params = std::move(ckpt.params);
    bundle->vocab = std::move(vocab);
    if (!markov_path.empty() && std::filesystem::exists(markov_path)) bundle->markov = load_markov_json(markov_path);
    bundle->val_acc = kNaN;
    if (ckpt.meta.contains("val_acc") && ckpt.meta["val_acc"].is_number())
        bundle->val_acc = ckpt.meta["val_acc"].get<double>();
    return bundle;
}

std::vector<std::vector<std::string>> alarm_sequences(const std::vector<PairedDocument>& docs,
                                                      const std::string& pad_token) {
    std::vector<std::vector<std::string>> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        std::vector<std::string> seq;
        for (const auto& t : d.alarm_tokens) {
            if (t != pad_token) seq.push_back(t);
        }
        if (!seq.empty()) out.push_back(std::move(seq));
    }
    return out;
}

json to_json(const SubmitResult& r) {
    json errors = json::array();
    for (const auto& e : r.errors) errors.push_back({{"index", e.index}, {"message", e.message}});
    return {{"received", r.received}, {"persisted", r.persisted}, {"suppressed", r.suppressed}, {"errors", errors}};
}

json to_json(const RetrainOutcome& r) {
    return {{"attempt", r.attempt},
            {"state", r.state},
            {"seed", r.seed},
            {"buffer_examples", r.buffer_examples},
            {"candidate_val_acc", nullable(r.candidate_val_acc)},
            {"previous_val_acc", nullable(r.previous_val_acc)},
            {"model_version", r.model_version},
            {"message", r.message}};
}

json to_json(const ServiceStatus& s) {
    return {{"model_version", s.model_version},
            {"model_loaded", s.model_loaded},
            {"num_classes", s.num_classes},
            {"labels", s.labels},
            {"val_acc", nullable(s.val_acc)},
            {"accept_rate", s.accept_rate ? json(*s.accept_rate) : json(nullptr)},
            {"resolved_in_window", s.resolved_in_window},
            {"buffer_size", s.buffer_size},
            {"training", s.training},
            {"retrain_eligible", s.retrain_eligible},
            {"policy",
             {{"rating_threshold", s.policy.rating_threshold},
              {"min_new_examples", s.policy.min_new_examples},
              {"acceptance_target", s.policy.acceptance_target},
              {"accept_window", s.policy.accept_window}}},
            {"last_retrain", s.last_retrain ? to_json(*s.last_retrain) : json(nullptr)}};
}

RecommendationService::RecommendationService(ServiceConfig cfg, std::shared_ptr<Storage> storage)
    : cfg_(std::move(cfg)), storage_(std::move(storage)) {
    cfg_.validate();
    if (!storage_) throw InvalidArgument("storage is required");
    if (auto current = storage_->get_meta("current_model")) {
        const auto j = json::parse(*current);
        model_ = load_bundle(j.at("model").get<std::string>(), j.at("vocab").get<std::string>(),
                             j.value("markov", std::string()), j.at("version").get<int>());
    } else if (!cfg_.model_path.empty() && std::filesystem::exists(cfg_.model_path)) {
        model_ = load_bundle(cfg_.model_path, cfg_.vocab_path, cfg_.markov_path, 1);
    }
    if (auto attempts = storage_->get_meta("retrain_attempts")) attempts_ = std::stoi(*attempts);
}

RecommendationService::~RecommendationService() {
    std::unique_lock lock(retrain_mutex_);
    if (retrain_thread_.joinable()) {
        auto t = std::move(retrain_thread_);
        lock.unlock();
        t.join();
    }
}

void RecommendationService::install_model(std::shared_ptr<const ModelBundle> bundle) {
    std::unique_lock lock(model_mutex_);
    model_ = std::move(bundle);
}

void RecommendationService::set_training_data(DatasetSplit split) {
    std::lock_guard lock(retrain_mutex_);
    base_data_ = std::move(split);
}

std::shared_ptr<const ModelBundle> RecommendationService::current_model() const {
    std::shared_lock lock(model_mutex_);
    return model_;
}

SubmitResult RecommendationService::submit_alarms(int turbine_id, const std::vector<RawAlarm>& events) {
    SubmitResult result;
    result.received = events.size();
    std::vector<AlarmEvent> valid;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto t = parse_timestamp(events[i].time_on);
        if (!t) {
            result.errors.push_back({i, "invalid timestamp '" + events[i].time_on + "'"});
            continue;
        }
        auto text = clean_text(events[i].text, cfg_.cleaning);
        if (text.empty()) {
            result.errors.push_back({i, "alarm text is empty after cleaning"});
            continue;
        }
        valid.push_back({turbine_id, *t, std::move(text)});
    }
    std::stable_sort(valid.begin(), valid.end(), [](const AlarmEvent& a, const AlarmEvent& b) {
        return a.time_on < b.time_on;
    });

    std::lock_guard lock(ingest_mutex_);
    const auto window = std::chrono::seconds{cfg_.cleaning.chatter_window_s};
    std::map<std::string, Timestamp> last_kept;
    std::vector<AlarmEvent> kept;
    for (auto& e : valid) {
        std::optional<Timestamp> last;
        if (auto it = last_kept.find(e.text); it != last_kept.end()) last = it->second;
        else last = storage_->last_alarm_with_text(turbine_id, e.text, e.time_on);
        if (last && e.time_on - *last <= window) {
            ++result.suppressed;
            continue;
        }
        last_kept[e.text] = e.time_on;
        kept.push_back(std::move(e));
    }
    if (!kept.empty()) storage_->insert_alarms(kept);
    result.persisted = kept.size();
    return result;
}

Recommendation RecommendationService::get_recommendations(int turbine_id, std::optional<std::size_t> k) {
    const std::size_t top = k.value_or(cfg_.top_k);
    if (top < 1) throw ValidationError("k must be >= 1");
    const auto bundle = current_model();
    if (!bundle) throw NoModelLoaded("no model is loaded");

    const auto latest = storage_->latest_alarm_time(turbine_id);
    if (!latest) throw NoAlarmsInWindow("no alarms stored for turbine " + std::to_string(turbine_id));
    const auto window = storage_->alarms_between(turbine_id, *latest - days_to_seconds(cfg_.sequencer.mem_days), *latest);
    if (window.empty()) throw NoAlarmsInWindow("no alarms in window for turbine " + std::to_string(turbine_id));

    PairedDocument doc;
    doc.turbine_id = turbine_id;
    doc.response_time = *latest;
    for (const auto& a : window) doc.alarm_tokens.push_back(a.text);

    Recommendation rec;
    rec.turbine_id = turbine_id;
    rec.created_at = now_seconds();
    rec.alarm_window = window;
    for (auto& [label, prob] : predict_topk(bundle->params, bundle->config, doc, bundle->vocab, top))
        rec.ranked.push_back({label, prob});
    if (bundle->markov) {
        try {
            std::vector<NextAlarm> next;
            for (auto& [alarm, prob] : predict_next(*bundle->markov, window.back().text, cfg_.markov_k))
                next.push_back({alarm, prob});
            rec.markov_next = std::move(next);
        } catch (const UnknownState&) {
            rec.markov_next = std::vector<NextAlarm>{};
        }
    }
    rec.status = RecommendationStatus::pending;
    rec.model_version = bundle->version;
    storage_->insert_recommendation(rec);
    return rec;
}

std::vector<Recommendation> RecommendationService::list_recommendations(std::optional<RecommendationStatus> status,
                                                                        std::size_t limit) {
    return storage_->list_recommendations(status, limit);
}

Recommendation RecommendationService::get_recommendation(const std::string& id) {
    auto rec = storage_->get_recommendation(id);
    if (!rec) throw UnknownRecommendation("unknown recommendation '" + id + "'");
    return *rec;
}

Recommendation RecommendationService::submit_feedback(const FeedbackRecord& in) {
    if (in.rating < 1 || in.rating > 5) throw ValidationError("rating must be in [1, 5]");
    FeedbackRecord fb = in;
    if (fb.corrected_label) {
        *fb.corrected_label = clean_text(*fb.corrected_label, cfg_.cleaning);
        if (fb.corrected_label->empty()) fb.corrected_label.reset();
    }
    if (fb.verdict == Verdict::accept && fb.corrected_label)
        throw ValidationError("corrected_label is only allowed with verdict reject");
    if (fb.at == Timestamp{}) fb.at = now_seconds();

    std::lock_guard lock(feedback_mutex_);
    auto rec = storage_->get_recommendation(fb.recommendation_id);
    if (!rec) throw UnknownRecommendation("unknown recommendation '" + fb.recommendation_id + "'");
    if (rec->status != RecommendationStatus::pending)
        throw AlreadyResolved(fb.recommendation_id + " is already " + to_string(rec->status));
    if (fb.verdict == Verdict::reject && fb.rating < cfg_.policy.rating_threshold && !fb.corrected_label)
        throw MissingCorrection("a rejected recommendation rated below " +
                                std::to_string(cfg_.policy.rating_threshold) + " needs a corrected_label");

    RecommendationStatus status = RecommendationStatus::accepted;
    std::optional<PairedDocument> example;
    if (fb.verdict == Verdict::reject) {
        status = fb.corrected_label ? RecommendationStatus::corrected : RecommendationStatus::rejected;
    }
    if (fb.corrected_label) {
        PairedDocument doc;
        doc.turbine_id = rec->turbine_id;
        doc.response_time = rec->alarm_window.empty() ? rec->created_at : rec->alarm_window.back().time_on;
        doc.label = *fb.corrected_label;
        for (const auto& a : rec->alarm_window) doc.alarm_tokens.push_back(a.text);
        example = std::move(doc);
    }
    if (!storage_->resolve(fb, status, example))
        throw AlreadyResolved(fb.recommendation_id + " is already resolved");
    rec->status = status;
    return *rec;
}

std::optional<double> RecommendationService::accept_rate(const RetrainPolicy& policy, std::size_t* resolved) const {
    const auto recent = storage_->recent_resolutions(policy.accept_window);
    if (resolved) *resolved = recent.size();
    if (recent.empty()) return std::nullopt;
    const auto accepted = std::count(recent.begin(), recent.end(), RecommendationStatus::accepted);
    return static_cast<double>(accepted) / static_cast<double>(recent.size());
}

const DatasetSplit& RecommendationService::training_data() {
    if (!base_data_) {
        if (cfg_.dataset_path.empty() || cfg_.split_path.empty())
            throw InsufficientData("no training corpus configured");
        base_data_ = materialize(read_dataset_jsonl(cfg_.dataset_path), read_split_json(cfg_.split_path));
    }
    return *base_data_;
}

RetrainOutcome RecommendationService::trigger_retrain() { return trigger_retrain(cfg_.policy); }

RetrainOutcome RecommendationService::trigger_retrain(const RetrainPolicy& policy) {
    policy.validate();
    std::unique_lock lock(retrain_mutex_);
    if (training_) throw RetrainInProgress("a retrain is already running");
    const auto base = current_model();
    if (!base) throw NoModelLoaded("no model is loaded");

    const auto buffer_size = storage_->buffer_size();
    const auto rate = accept_rate(policy);
    const bool enough_examples = buffer_size >= policy.min_new_examples;
    const bool low_acceptance = rate && *rate < policy.acceptance_target;
    if (!enough_examples && !low_acceptance) {
        throw InsufficientData("buffer has " + std::to_string(buffer_size) + " of " +
                               std::to_string(policy.min_new_examples) + " examples and the accept rate is " +
                               (rate ? std::to_string(*rate) : std::string("undefined")));
    }
    DatasetSplit data = training_data();
    auto buffer = storage_->buffer();

    if (retrain_thread_.joinable()) retrain_thread_.join();
    RetrainOutcome outcome;
    outcome.attempt = ++attempts_;
    outcome.state = "running";
    outcome.seed = derive_seed(cfg_.train.seed, static_cast<std::uint64_t>(attempts_));
    outcome.buffer_examples = buffer.size();
    outcome.model_version = base->version;
    outcome.candidate_val_acc = kNaN;
    outcome.previous_val_acc = kNaN;
    storage_->set_meta("retrain_attempts", std::to_string(attempts_));
    storage_->log_event("retrain_started", to_json(outcome).dump());
    training_ = true;
    last_retrain_ = outcome;
    retrain_thread_ = std::thread(&RecommendationService::run_retrain, this, policy, base, std::move(data),
                                  std::move(buffer), outcome);
    return outcome;
}

void RecommendationService::run_retrain(RetrainPolicy, std::shared_ptr<const ModelBundle> base, DatasetSplit data,
                                        std::vector<PairedDocument> buffer, RetrainOutcome outcome) {
    try {
        data.train.insert(data.train.end(), buffer.begin(), buffer.end());
        const auto vocab = build_vocab(data.train, base->vocab.pad_token());

        ModelConfig mcfg = base->config;
        mcfg.vocab_size = vocab.size();
        mcfg.num_classes = vocab.num_labels();
        TrainConfig tcfg = cfg_.train;
        tcfg.seed = outcome.seed;
        auto result = train(data, vocab, mcfg, tcfg);

        outcome.candidate_val_acc = val_accuracy(result.best_params, mcfg, vocab, data.validation, tcfg.threads);
        outcome.previous_val_acc =
            val_accuracy(base->params, base->config, base->vocab, data.validation, tcfg.threads);
        const bool comparable = std::isfinite(outcome.candidate_val_acc) && std::isfinite(outcome.previous_val_acc);
        const bool better = !comparable || outcome.candidate_val_acc >= outcome.previous_val_acc;

        if (!better) {
            outcome.state = "rejected";
            outcome.message = "candidate validation accuracy below the serving model";
            storage_->log_event("retrain_rejected", to_json(outcome).dump());
        } else {
            auto bundle = std::make_shared<ModelBundle>();
            bundle->version = base->version + 1;
            bundle->config = mcfg;
            bundle->params = result.best_params;
            bundle->vocab = vocab;
            bundle->val_acc = outcome.candidate_val_acc;
            const auto seqs = alarm_sequences(data.train, vocab.pad_token());
            if (!seqs.empty()) bundle->markov = fit_transitions(seqs, cfg_.markov_alpha);

            auto dir = cfg_.model_dir;
            if (dir.empty()) dir = cfg_.model_path.parent_path();
            if (!dir.empty()) {
                std::filesystem::create_directories(dir);
                const auto tag = ".v" + std::to_string(bundle->version);
                const auto model_file = dir / ("model" + tag + ".ckpt");
                const auto vocab_file = dir / ("vocab" + tag + ".json");
                const auto markov_file = dir / ("markov" + tag + ".json");
                Checkpoint ckpt;
                ckpt.config = mcfg;
                ckpt.params = bundle->params;
                ckpt.vocab_hash = vocab.hash();
                ckpt.meta = {{"seed", tcfg.seed},
                             {"epochs", tcfg.epochs},
                             {"best_epoch", result.best_epoch},
                             {"val_acc", nullable(outcome.candidate_val_acc)},
                             {"selection", "best_validation"},
                             {"version", bundle->version},
                             {"buffer_examples", buffer.size()}};
                save_model(model_file, ckpt);
                save_vocab_json(vocab_file, vocab, mcfg.embed_dim);
                if (bundle->markov) save_markov_json(markov_file, *bundle->markov);
                storage_->set_meta("current_model",
                                   json{{"model", model_file.string()},
                                        {"vocab", vocab_file.string()},
                                        {"markov", bundle->markov ? markov_file.string() : std::string()},
                                        {"version", bundle->version}}
                                       .dump());
            }
            storage_->drain_buffer(buffer.size(), bundle->version);
            outcome.model_version = bundle->version;
            outcome.state = "accepted";
            install_model(std::move(bundle));
            storage_->log_event("retrain_accepted", to_json(outcome).dump());
        }
    } catch (const std::exception& e) {
        outcome.state = "failed";
        outcome.message = e.what();
        try {
            storage_->log_event("retrain_failed", to_json(outcome).dump());
        } catch (const std::exception&) {
        }
    }
    std::lock_guard lock(retrain_mutex_);
    last_retrain_ = outcome;
    training_ = false;
}

std::optional<RetrainOutcome> RecommendationService::wait_for_retrain() {
    std::unique_lock lock(retrain_mutex_);
    if (retrain_thread_.joinable()) {
        auto t = std::move(retrain_thread_);
        lock.unlock();
        t.join();
        lock.lock();
    }
    return last_retrain_;
}

ServiceStatus RecommendationService::status() const {
    ServiceStatus s;
    s.policy = cfg_.policy;
    if (const auto bundle = current_model()) {
        s.model_loaded = true;
        s.model_version = bundle->version;
        s.num_classes = bundle->vocab.num_labels();
        s.labels = bundle->vocab.labels();
        s.val_acc = bundle->val_acc;
    } else {
        s.val_acc = kNaN;
    }
    s.accept_rate = accept_rate(cfg_.policy, &s.resolved_in_window);
    s.buffer_size = storage_->buffer_size();
    s.retrain_eligible = s.buffer_size >= cfg_.policy.min_new_examples ||
                         (s.accept_rate && *s.accept_rate < cfg_.policy.acceptance_target);
    std::lock_guard lock(retrain_mutex_);
    s.training = training_;
    s.last_retrain = last_retrain_;
    return s;
}

}  // namespace a2a
