#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "alarm2action/tensor.hpp"

namespace a2a {

/// First-order Markov chain over normalized alarm texts.
struct TransitionModel {
    std::vector<std::string> states;  // sorted
    std::vector<long> counts;         // S x S, row-major
    Matrix probs;                     // S x S
    double smoothing_alpha = 0.0;
    /// Rows with no observed successor and alpha = 0 (all-zero prob row).
    std::vector<bool> absorbing;

    std::size_t num_states() const noexcept { return states.size(); }
    long count(std::size_t from, std::size_t to) const { return counts[from * states.size() + to]; }
    /// Throws UnknownState.
    std::size_t state_index(std::string_view s) const;

    friend bool operator==(const TransitionModel&, const TransitionModel&) = default;
};

/// Counts adjacent pairs across all sequences and row-normalizes
/// counts + alpha. Throws EmptyInput when no states are observed.
TransitionModel fit_transitions(const std::vector<std::vector<std::string>>& sequences, double alpha = 0.0);

/// Top-k successors of `current`, descending probability, ties by state order.
std::vector<std::pair<std::string, double>> predict_next(const TransitionModel& model, std::string_view current,
                                                         std::size_t k);

/// Sum of log transition probabilities; -infinity if any step has
/// probability 0. Requires at least two states.
double sequence_logprob(const TransitionModel& model, const std::vector<std::string>& seq);

void save_markov_json(const std::filesystem::path& path, const TransitionModel& model);
TransitionModel load_markov_json(const std::filesystem::path& path);

}  // namespace a2a
