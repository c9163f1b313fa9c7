#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "alarm2action/ingest.hpp"
#include "alarm2action/markov.hpp"
#include "alarm2action/rnn.hpp"
#include "alarm2action/sequencer.hpp"
#include "alarm2action/storage.hpp"
#include "alarm2action/trainer.hpp"
#include "alarm2action/vocab.hpp"

namespace a2a {

struct RetrainPolicy {
    int rating_threshold = 3;
    std::size_t min_new_examples = 10;
    double acceptance_target = 0.7;
    /// Number of most recent resolved recommendations in the accept rate.
    std::size_t accept_window = 50;

    void validate() const;
};

struct ServiceConfig {
    std::filesystem::path model_path;
    std::filesystem::path vocab_path;
    /// Optional; next-alarm hints are omitted without it.
    std::filesystem::path markov_path;
    /// Original training corpus (dataset.jsonl + split.json) used by retraining.
    std::filesystem::path dataset_path;
    std::filesystem::path split_path;
    /// Retrained models are written here; defaults to the model's directory.
    std::filesystem::path model_dir;
    std::string db_path = ":memory:";

    RetrainPolicy policy;
    TrainConfig train;
    SequencerConfig sequencer;
    CleaningConfig cleaning;
    std::size_t top_k = 3;
    std::size_t markov_k = 3;
    double markov_alpha = 0.0;

    std::string bind = "127.0.0.1";
    int port = 8080;
    /// Required in X-Api-Token when non-empty.
    std::string api_token;
    std::filesystem::path static_dir;

    void validate() const;
};

/// Relative paths are resolved against `base_dir`. Unknown keys are rejected.
ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ServiceConfig load_service_config(const std::filesystem::path& path);
nlohmann::json to_json(const ServiceConfig& cfg);

/// Applies A2A_* overrides (A2A_BIND, A2A_PORT, A2A_MODEL, A2A_VOCAB,
/// A2A_MARKOV, A2A_DB, A2A_API_TOKEN, A2A_STATIC_DIR, A2A_RATING_THRESHOLD,
/// A2A_MIN_NEW_EXAMPLES, A2A_ACCEPTANCE_TARGET). `getenv` is injectable for tests.
void apply_env_overrides(ServiceConfig& cfg,
                         const std::function<std::optional<std::string>(const char*)>& getenv = {});

/// A loaded model with everything needed to serve it. Immutable once built.
struct ModelBundle {
    int version = 1;
    ModelConfig config;
    ModelParams params;
    Vocabulary vocab;
    std::optional<TransitionModel> markov;
    /// Validation accuracy recorded at training time; NaN when unknown.
    double val_acc = 0;
};

/// Loads checkpoint + vocabulary (+ Markov model when the path exists).
std::shared_ptr<const ModelBundle> load_bundle(const std::filesystem::path& model_path,
                                               const std::filesystem::path& vocab_path,
                                               const std::filesystem::path& markov_path, int version);

/// Alarm texts of each document with padding removed, for the Markov fit.
std::vector<std::vector<std::string>> alarm_sequences(const std::vector<PairedDocument>& docs,
                                                      const std::string& pad_token);

struct RawAlarm {
    std::string time_on;
    std::string text;
};

struct SubmitResult {
    std::size_t received = 0;
    std::size_t persisted = 0;
    std::size_t suppressed = 0;
    struct EventError {
        std::size_t index;
        std::string message;
    };
    std::vector<EventError> errors;
};

struct RetrainOutcome {
    int attempt = 0;
    /// "running", "accepted", "rejected" or "failed".
    std::string state;
    std::uint64_t seed = 0;
    std::size_t buffer_examples = 0;
    double candidate_val_acc = 0;
    double previous_val_acc = 0;
    int model_version = 0;
    std::string message;
};

struct ServiceStatus {
    int model_version = 0;
    bool model_loaded = false;
    std::size_t num_classes = 0;
    std::vector<std::string> labels;
    double val_acc = 0;
    std::optional<double> accept_rate;
    std::size_t resolved_in_window = 0;
    std::size_t buffer_size = 0;
    bool training = false;
    bool retrain_eligible = false;
    RetrainPolicy policy;
    std::optional<RetrainOutcome> last_retrain;
};

nlohmann::json to_json(const SubmitResult& r);
nlohmann::json to_json(const RetrainOutcome& r);
nlohmann::json to_json(const ServiceStatus& s);

class RecommendationService {
public:
    /// Loads the model named by the storage's current-model record, falling
    /// back to the configured paths. Serving without a model is allowed;
    /// recommendation requests then fail with NoModelLoaded.
    RecommendationService(ServiceConfig cfg, std::shared_ptr<Storage> storage);
    ~RecommendationService();
    RecommendationService(const RecommendationService&) = delete;
    RecommendationService& operator=(const RecommendationService&) = delete;

    /// Replaces the serving model (tests, CLI). Not persisted.
    void install_model(std::shared_ptr<const ModelBundle> bundle);
    /// Base corpus for retraining, overriding dataset_path/split_path.
    void set_training_data(DatasetSplit split);

    std::shared_ptr<const ModelBundle> current_model() const;

    /// Parses, cleans and chatter-filters the events, persisting the
    /// survivors. Malformed events are reported individually.
    SubmitResult submit_alarms(int turbine_id, const std::vector<RawAlarm>& events);

    /// Ranks repair actions for the alarms in the memory window ending at the
    /// turbine's latest alarm and persists the result as pending.
    Recommendation get_recommendations(int turbine_id, std::optional<std::size_t> k = std::nullopt);

    std::vector<Recommendation> list_recommendations(std::optional<RecommendationStatus> status, std::size_t limit);
    Recommendation get_recommendation(const std::string& id);

    Recommendation submit_feedback(const FeedbackRecord& fb);

    /// Starts a background retrain. Throws RetrainInProgress or InsufficientData.
    RetrainOutcome trigger_retrain();
    RetrainOutcome trigger_retrain(const RetrainPolicy& policy);
    /// Blocks until no retrain is running; returns the latest outcome.
    std::optional<RetrainOutcome> wait_for_retrain();

    ServiceStatus status() const;
    const ServiceConfig& config() const noexcept { return cfg_; }
    Storage& storage() noexcept { return *storage_; }

private:
    void run_retrain(RetrainPolicy policy, std::shared_ptr<const ModelBundle> base, DatasetSplit data,
                     std::vector<PairedDocument> buffer, RetrainOutcome outcome);
    std::optional<double> accept_rate(const RetrainPolicy& policy, std::size_t* resolved = nullptr) const;
    const DatasetSplit& training_data();

    ServiceConfig cfg_;
    std::shared_ptr<Storage> storage_;

    mutable std::shared_mutex model_mutex_;
    std::shared_ptr<const ModelBundle> model_;

    std::mutex ingest_mutex_;
    std::mutex feedback_mutex_;

    mutable std::mutex retrain_mutex_;
    std::thread retrain_thread_;
    bool training_ = false;
    int attempts_ = 0;
    std::optional<RetrainOutcome> last_retrain_;
    std::optional<DatasetSplit> base_data_;
};

}  // namespace a2a
