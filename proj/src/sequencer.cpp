#include "alarm2action/sequencer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alarm2action/errors.hpp"
#include "alarm2action/random.hpp"

namespace a2a {

void SequencerConfig::validate() const {
    if (mem_days < 0) throw InvalidArgument("mem_days must be >= 0");
    if (target_len < 1) throw InvalidArgument("target_len must be >= 1");
    if (!(holdout_val > 0 && holdout_val < 1)) throw InvalidArgument("holdout_val must be in (0,1)");
    if (!(holdout_test_of_val > 0 && holdout_test_of_val < 1)) {
        throw InvalidArgument("holdout_test_of_val must be in (0,1)");
    }
}

PairingResult build_pairs(const std::vector<AlarmEvent>& alarms, const std::vector<ResponseEvent>& responses,
                          const SequencerConfig& cfg) {
    cfg.validate();
    auto by_time = [](const auto& a, const auto& b) { return a.time_on < b.time_on; };
    if (!std::is_sorted(alarms.begin(), alarms.end(), by_time)) throw UnsortedInput("alarms not sorted");
    if (!std::is_sorted(responses.begin(), responses.end(), by_time)) throw UnsortedInput("responses not sorted");

    const auto mem = days_to_seconds(cfg.mem_days);
    PairingResult out;
    // Two monotone cursors: [lo, hi) is the alarm range inside the window.
    std::size_t lo = 0, hi = 0;
    for (const auto& r : responses) {
        while (hi < alarms.size() && alarms[hi].time_on <= r.time_on) ++hi;
        while (lo < hi && alarms[lo].time_on < r.time_on - mem) ++lo;
        if (lo == hi) {
            ++out.skipped_responses;
            continue;
        }
        PairedDocument doc{r.turbine_id, r.time_on, r.text, {}};
        doc.alarm_tokens.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) doc.alarm_tokens.push_back(alarms[i].text);
        out.documents.push_back(std::move(doc));
    }
    return out;
}

PairedDocument pad_or_truncate(PairedDocument doc, const SequencerConfig& cfg) {
    auto& tokens = doc.alarm_tokens;
    const std::size_t n = cfg.target_len;
    if (tokens.size() > n) {
        tokens.erase(tokens.begin(), tokens.end() - static_cast<std::ptrdiff_t>(n));
    } else if (tokens.size() < n) {
        tokens.insert(tokens.begin(), n - tokens.size(), cfg.pad_token);
    }
    return doc;
}

SplitSizes split_sizes(std::size_t n, const SequencerConfig& cfg) {
    cfg.validate();
    const auto holdout = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.holdout_val));
    const auto validation =
        static_cast<std::size_t>(std::floor(static_cast<double>(holdout) * cfg.holdout_test_of_val));
    return {n - holdout, validation, holdout - validation};
}

SplitIndices split_indices(const std::vector<PairedDocument>& docs, const SequencerConfig& cfg,
                           std::optional<int> holdout_turbine) {
    SplitIndices out;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (holdout_turbine && docs[i].turbine_id == *holdout_turbine) {
            out.holdout.push_back(i);
        } else {
            pool.push_back(i);
        }
    }
    if (pool.empty()) throw EmptyDataset("no documents to split");
    Rng rng(cfg.seed);
    shuffle(pool, rng);
    const auto sizes = split_sizes(pool.size(), cfg);
    auto it = pool.begin();
    out.train.assign(it, it + sizes.train);
    it += sizes.train;
    out.validation.assign(it, it + sizes.validation);
    it += sizes.validation;
    out.test.assign(it, pool.end());
    return out;
}

DatasetSplit materialize(const std::vector<PairedDocument>& docs, const SplitIndices& idx) {
    auto pick = [&](const std::vector<std::size_t>& ids) {
        std::vector<PairedDocument> v;
        v.reserve(ids.size());
        for (auto i : ids) v.push_back(docs.at(i));
        return v;
    };
    return {pick(idx.train), pick(idx.validation), pick(idx.test)};
}

DatasetSplit split_dataset(const std::vector<PairedDocument>& docs, const SequencerConfig& cfg) {
    if (docs.empty()) throw EmptyDataset("no documents to split");
    return materialize(docs, split_indices(docs, cfg));
}

}  // namespace a2a
