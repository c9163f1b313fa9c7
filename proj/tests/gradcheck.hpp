// Central finite-difference check of backward() against loss(forward()).
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "alarm2action/rnn.hpp"

namespace gradcheck {

struct Report {
    std::size_t entries = 0;
    std::size_t failures = 0;
    double max_rel_error = 0;
    std::string worst;
    bool pad_row_zero = true;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is ~0 from dividing round-off by round-off.
inline double rel_error(double analytic, double numeric, double floor) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline Report run(const a2a::ModelConfig& cfg, std::uint64_t seed, double step = 1e-5, double tol = 1e-4,
                  double floor = 1e-7) {
    a2a::Rng rng(seed);
    auto params = a2a::init_params(cfg, rng);
    // Larger than the default init so every gate saturates differently.
    a2a::for_each_tensor(params, [&](const std::string& name, std::span<double> t) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (name == "embedding" && i < cfg.embed_dim) continue;
            t[i] = a2a::uniform(rng, -0.5, 0.5);
        }
    });
    std::vector<int> tokens(cfg.seq_len);
    for (std::size_t t = 0; t < cfg.seq_len; ++t) tokens[t] = static_cast<int>(a2a::uniform_index(rng, cfg.vocab_size));
    tokens[0] = 0;  // one pad step
    const int label = static_cast<int>(a2a::uniform_index(rng, cfg.num_classes));

    const auto fwd = a2a::forward(params, cfg, tokens);
    const auto grads = a2a::backward(params, cfg, fwd.cache, label);

    auto loss_at = [&](const a2a::ModelParams& p) { return a2a::loss(a2a::forward(p, cfg, tokens).probs, label); };

    Report rep;
    std::vector<std::span<const double>> analytic;
    a2a::for_each_tensor(grads, [&](const std::string&, std::span<const double> t) { analytic.push_back(t); });

    std::size_t tensor = 0;
    auto probe = params;
    a2a::for_each_tensor(probe, [&](const std::string& name, std::span<double> t) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double a = analytic[tensor][i];
            if (name == "embedding" && i < cfg.embed_dim) {
                if (a != 0.0) rep.pad_row_zero = false;
                continue;
            }
            const double keep = t[i];
            t[i] = keep + step;
            const double up = loss_at(probe);
            t[i] = keep - step;
            const double down = loss_at(probe);
            t[i] = keep;
            const double numeric = (up - down) / (2 * step);
            const double err = rel_error(a, numeric, floor);
            ++rep.entries;
            if (err > tol) ++rep.failures;
            if (err > rep.max_rel_error) {
                rep.max_rel_error = err;
                rep.worst = name + "[" + std::to_string(i) + "]";
            }
        }
        ++tensor;
    });
    return rep;
}

}  // namespace gradcheck
