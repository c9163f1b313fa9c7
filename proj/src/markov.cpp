#include "alarm2action/markov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "alarm2action/errors.hpp"

namespace a2a {

std::size_t TransitionModel::state_index(std::string_view s) const {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    if (it == states.end() || *it != s) throw UnknownState(std::string(s));
    return static_cast<std::size_t>(it - states.begin());
}

namespace {

void normalize(TransitionModel& m) {
    const std::size_t n = m.num_states();
    m.probs = Matrix(n, n);
    m.absorbing.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0;
        for (std::size_t j = 0; j < n; ++j) total += static_cast<double>(m.count(i, j)) + m.smoothing_alpha;
        if (total == 0) {
            m.absorbing[i] = true;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            m.probs(i, j) = (static_cast<double>(m.count(i, j)) + m.smoothing_alpha) / total;
        }
    }
}

}  // namespace

TransitionModel fit_transitions(const std::vector<std::vector<std::string>>& sequences, double alpha) {
    if (!(alpha >= 0)) throw InvalidArgument("alpha must be >= 0");
    std::set<std::string> seen;
    for (const auto& s : sequences) seen.insert(s.begin(), s.end());
    if (seen.empty()) throw EmptyInput("no states observed");

    TransitionModel m;
    m.states.assign(seen.begin(), seen.end());
    m.smoothing_alpha = alpha;
    const std::size_t n = m.states.size();
    m.counts.assign(n * n, 0);
    for (const auto& s : sequences) {
        for (std::size_t t = 1; t < s.size(); ++t) {
            ++m.counts[m.state_index(s[t - 1]) * n + m.state_index(s[t])];
        }
    }
    normalize(m);
    return m;
}

std::vector<std::pair<std::string, double>> predict_next(const TransitionModel& model, std::string_view current,
                                                         std::size_t k) {
    const std::size_t from = model.state_index(current);
    std::vector<std::size_t> order(model.num_states());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return model.probs(from, a) > model.probs(from, b); });
    order.resize(std::min(k, order.size()));
    std::vector<std::pair<std::string, double>> out;
    out.reserve(order.size());
    for (auto j : order) out.emplace_back(model.states[j], model.probs(from, j));
    return out;
}

double sequence_logprob(const TransitionModel& model, const std::vector<std::string>& seq) {
    if (seq.size() < 2) throw InvalidArgument("sequence needs at least two states");
    double total = 0;
    std::size_t prev = model.state_index(seq[0]);
    for (std::size_t t = 1; t < seq.size(); ++t) {
        const std::size_t cur = model.state_index(seq[t]);
        const double p = model.probs(prev, cur);
        if (p <= 0) total = -std::numeric_limits<double>::infinity();
        else if (std::isfinite(total)) total += std::log(p);
        prev = cur;
    }
    return total;
}

void save_markov_json(const std::filesystem::path& path, const TransitionModel& model) {
    nlohmann::json j;
    j["states"] = model.states;
    j["alpha"] = model.smoothing_alpha;
    j["counts"] = model.counts;
    j["probs"] = model.probs.data;
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out << j.dump() << '\n';
}

TransitionModel load_markov_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    try {
        auto j = nlohmann::json::parse(in);
        TransitionModel m;
        m.states = j.at("states").get<std::vector<std::string>>();
        if (!std::is_sorted(m.states.begin(), m.states.end())) throw Error("IoError", "states not sorted");
        m.smoothing_alpha = j.at("alpha").get<double>();
        m.counts = j.at("counts").get<std::vector<long>>();
        const std::size_t n = m.states.size();
        if (m.counts.size() != n * n) throw Error("IoError", "counts shape mismatch");
        normalize(m);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error("IoError", path.string() + ": " + e.what());
    }
}

}  // namespace a2a
