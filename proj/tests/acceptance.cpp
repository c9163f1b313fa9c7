// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "alarm2action/http_api.hpp"
#include "fixture.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace a2a;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (!pass) detail << "; ";
            pass = false;
            detail << "failed: " << what;
        }
    }
};

int failures = 0;

void run(const std::string& name, double budget_s, const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    v.require(secs < budget_s, "runtime " + std::to_string(secs) + " s over budget");
    if (!v.pass) ++failures;
    std::printf("%s  %-24s %7.2fs / %.0fs  %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), secs, budget_s,
                v.detail.str().c_str());
    std::fflush(stdout);
}

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ModelConfig model_for(const Vocabulary& v, std::size_t dim, std::size_t seq_len, bool bi) {
    ModelConfig c;
    c.vocab_size = v.size();
    c.embed_dim = dim;
    c.hidden_dim = dim;
    c.num_classes = v.num_labels();
    c.seq_len = seq_len;
    c.bidirectional = bi;
    return c;
}

// --------------------------------------------------------------------------

void gradient_check(Verdict& v) {
    ModelConfig cfg;
    cfg.vocab_size = 7;
    cfg.embed_dim = 3;
    cfg.hidden_dim = 4;
    cfg.num_classes = 3;
    cfg.seq_len = 5;
    double worst = 0;
    std::size_t entries = 0;
    for (bool bi : {false, true}) {
        cfg.bidirectional = bi;
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto r = gradcheck::run(cfg, seed, 1e-5, 1e-4);
            entries += r.entries;
            worst = std::max(worst, r.max_rel_error);
            v.require(r.failures == 0, (bi ? "bi" : "uni") + std::string(" seed ") + std::to_string(seed) + " " +
                                           std::to_string(r.failures) + " entries, worst " + r.worst);
            v.require(r.pad_row_zero, "pad row gradient nonzero");
        }
    }
    v.detail << entries << " entries, max rel error " << worst;
}

void softmax_bounds(Verdict& v) {
    oracle::Gen g(2024);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        ModelConfig cfg;
        cfg.vocab_size = static_cast<std::size_t>(oracle::pick(g, 2, 40));
        cfg.embed_dim = static_cast<std::size_t>(oracle::pick(g, 1, 12));
        cfg.hidden_dim = static_cast<std::size_t>(oracle::pick(g, 1, 12));
        cfg.num_classes = static_cast<std::size_t>(oracle::pick(g, 2, 30));
        cfg.seq_len = static_cast<std::size_t>(oracle::pick(g, 1, 20));
        cfg.bidirectional = i % 2 == 1;
        Rng rng(g());
        auto p = init_params(cfg, rng);
        // Scaled weights push some logits far apart.
        const double scale = static_cast<double>(oracle::pick(g, 1, 200));
        for_each_tensor(p, [&](const std::string& name, std::span<double> t) {
            for (std::size_t k = name == "embedding" ? cfg.embed_dim : 0; k < t.size(); ++k) t[k] *= scale;
        });
        std::vector<int> tokens(cfg.seq_len);
        for (auto& t : tokens) t = static_cast<int>(oracle::pick(g, 0, static_cast<long>(cfg.vocab_size) - 1));
        const auto probs = forward(p, cfg, tokens).probs;
        double sum = 0;
        for (double q : probs) {
            v.require(q >= 0.0 && q <= 1.0, "probability outside [0,1]");
            sum += q;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    v.require(worst <= 1e-9, "sum deviation " + std::to_string(worst));
    v.detail << "1000 passes, max |sum-1| " << worst;
}

void oracle_equivalence(Verdict& v) {
    oracle::Gen g(77);
    constexpr int kTrials = 120;
    int chatter_ok = 0, pairs_ok = 0, markov_ok = 0, eval_ok = 0;
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto log = oracle::alarm_log(g, static_cast<std::size_t>(oracle::pick(g, 0, 800)),
                                           static_cast<int>(oracle::pick(g, 1, 6)),
                                           static_cast<int>(oracle::pick(g, 1, 3)), oracle::pick(g, 1, 120));
        CleaningConfig cc;
        cc.chatter_window_s = oracle::pick(g, 1, 200);
        chatter_ok += remove_chattering(log, cc) == oracle::chatter(log, cc.chatter_window_s);
    }
    constexpr long kDay = 86400;
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto alarms = oracle::alarm_log(g, static_cast<std::size_t>(oracle::pick(g, 0, 400)), 8, 1,
                                              oracle::pick(g, 60, 20 * kDay));
        const long span = alarms.empty() ? kDay : (alarms.back().time_on - oracle::at(0)).count() + 5 * kDay;
        const auto responses = oracle::response_log(g, static_cast<std::size_t>(oracle::pick(g, 0, 80)), span, 5);
        SequencerConfig sc;
        sc.mem_days = oracle::pick(g, 1, 30);
        pairs_ok += build_pairs(alarms, responses, sc).documents == oracle::pairs(alarms, responses, sc.mem_days);
    }
    for (int trial = 0; trial < kTrials; ++trial) {
        auto seqs = oracle::sequences(g, static_cast<std::size_t>(oracle::pick(g, 1, 150)), 12,
                                      static_cast<int>(oracle::pick(g, 1, 9)));
        seqs.push_back({"alarm 0", "alarm 0"});
        const double alpha = trial % 2 ? 0.0 : 0.5;
        const auto m = fit_transitions(seqs, alpha);
        const auto want = oracle::markov(seqs);
        bool ok = m.states == want.states;
        for (std::size_t i = 0; ok && i < m.num_states(); ++i) {
            for (std::size_t j = 0; j < m.num_states(); ++j) {
                const auto key = std::make_pair(m.states[i], m.states[j]);
                const long n = want.counts.count(key) ? want.counts.at(key) : 0;
                if (m.count(i, j) != n) ok = false;
                if (std::abs(m.probs(i, j) - want.prob(m.states[i], m.states[j], alpha)) > 1e-12) ok = false;
            }
        }
        markov_ok += ok;
    }
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto train_docs = oracle::documents(g, 30, 6, 8, 4);
        const auto vocab = build_vocab(train_docs);
        const auto cfg = model_for(vocab, static_cast<std::size_t>(oracle::pick(g, 1, 6)), 6, trial % 2 == 0);
        Rng rng(static_cast<std::uint64_t>(trial) + 1);
        auto p = init_params(cfg, rng);
        for_each_tensor(p, [&](const std::string& name, std::span<double> t) {
            for (std::size_t k = name == "embedding" ? cfg.embed_dim : 0; k < t.size(); ++k)
                t[k] = uniform(rng, -1, 1);
        });
        const auto docs = oracle::documents(g, 40, 9, 12, 5);
        const auto got = evaluate(p, cfg, docs, vocab);
        const auto want = oracle::evaluate(p, cfg, docs, vocab);
        eval_ok += got.correct == want.correct && got.examples == want.total;
    }
    v.require(chatter_ok == kTrials, "remove_chattering");
    v.require(pairs_ok == kTrials, "build_pairs");
    v.require(markov_ok == kTrials, "fit_transitions");
    v.require(eval_ok == kTrials, "evaluate");
    v.detail << "chatter " << chatter_ok << "/" << kTrials << ", pairs " << pairs_ok << "/" << kTrials << ", markov "
             << markov_ok << "/" << kTrials << ", evaluate " << eval_ok << "/" << kTrials;
}

struct Prepared {
    std::vector<PairedDocument> docs;
    DatasetSplit split;
    Vocabulary vocab;
};

Prepared prepare(const ScenarioSpec& spec, std::size_t target_len, std::uint64_t split_seed) {
    Prepared p;
    SequencerConfig seq;
    seq.mem_days = spec.mem_days;
    seq.target_len = target_len;
    seq.seed = split_seed;
    p.docs = fixture::sequence_corpus(generate_corpus(spec), seq);
    p.split = split_dataset(p.docs, seq);
    p.vocab = build_vocab(p.split.train);
    return p;
}

double test_accuracy(const Prepared& p, bool bi, std::size_t dim, std::size_t seq_len, int epochs,
                     std::uint64_t seed, int* best_epoch = nullptr) {
    const auto cfg = model_for(p.vocab, dim, seq_len, bi);
    TrainConfig t;
    t.epochs = epochs;
    t.lr = 0.01;
    t.clip_threshold = 1.0;
    t.seed = seed;
    const auto r = train(p.split, p.vocab, cfg, t);
    if (best_epoch) *best_epoch = r.best_epoch;
    return evaluate(r.best_params, cfg, p.split.test, p.vocab).accuracy.value_or(0.0);
}

void learnable_convergence(Verdict& v) {
    const auto spec = learnable_spec(8, 12, 730, 11);
    const auto p = prepare(spec, 20, 11);
    v.require(p.vocab.num_labels() >= 8, "fewer than 8 classes");
    v.require(p.docs.size() >= 800, "fewer than 800 documents");
    const double lstm = test_accuracy(p, false, 32, 20, 50, 11);
    const double bilstm = test_accuracy(p, true, 32, 20, 50, 11);
    const double majority = majority_baseline(p.split.train, p.split.test);
    v.require(lstm >= 0.95, "LSTM accuracy");
    v.require(bilstm >= 0.95, "BiLSTM accuracy");
    v.require(majority <= 0.25, "majority baseline");
    v.detail << p.vocab.num_labels() << " classes, " << p.docs.size() << " docs, test LSTM " << fmt(lstm)
             << " BiLSTM " << fmt(bilstm) << " majority " << fmt(majority);
}

void direction_benefit(Verdict& v) {
    std::vector<double> uni, bi;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto spec = ambiguous_context_spec(4, 6, 365, 100 + seed);
        const auto p = prepare(spec, 16, seed);
        uni.push_back(test_accuracy(p, false, 24, 16, 30, seed));
        bi.push_back(test_accuracy(p, true, 24, 16, 30, seed));
    }
    const double mu = median(uni), mb = median(bi);
    v.require(mb >= mu, "BiLSTM median below LSTM median");
    v.detail << "median test LSTM " << fmt(mu) << " BiLSTM " << fmt(mb) << " (LSTM";
    for (double x : uni) v.detail << " " << fmt(x, 3);
    v.detail << "; BiLSTM";
    for (double x : bi) v.detail << " " << fmt(x, 3);
    v.detail << ")";
}

void split_partition(Verdict& v) {
    const std::map<std::size_t, std::array<std::size_t, 3>> expected{
        {10, {7, 1, 2}}, {100, {70, 15, 15}}, {1000, {700, 150, 150}}};
    for (const auto& [n, sizes] : expected) {
        oracle::Gen g(n);
        const auto docs = oracle::documents(g, n, 4, 10, 3);
        SequencerConfig cfg;
        cfg.seed = 5;
        const auto a = split_indices(docs, cfg);
        const auto b = split_indices(docs, cfg);
        const auto tag = "n=" + std::to_string(n);
        v.require(a.train.size() == sizes[0] && a.validation.size() == sizes[1] && a.test.size() == sizes[2],
                  tag + " sizes");
        std::set<std::size_t> all;
        all.insert(a.train.begin(), a.train.end());
        all.insert(a.validation.begin(), a.validation.end());
        all.insert(a.test.begin(), a.test.end());
        v.require(all.size() == n && *all.rbegin() == n - 1, tag + " not a partition");
        v.require(a.train == b.train && a.validation == b.validation && a.test == b.test, tag + " nondeterministic");
        v.detail << tag << " " << a.train.size() << "/" << a.validation.size() << "/" << a.test.size() << " ";
    }
}

void markov_model(Verdict& v) {
    // A->B x3, B->C x2, B->A x1, C->A x2.
    const std::vector<std::vector<std::string>> corpus{{"A", "B", "C"}, {"A", "B", "A"}, {"B", "C", "A"},
                                                       {"C", "A", "B"}};
    const auto m = fit_transitions(corpus);
    const std::map<std::string, std::pair<std::string, double>> hand{
        {"A", {"B", 1.0}}, {"B", {"C", 2.0 / 3.0}}, {"C", {"A", 1.0}}};
    for (const auto& [state, want] : hand) {
        const auto top = predict_next(m, state, 1);
        v.require(top.size() == 1 && top[0].first == want.first && std::abs(top[0].second - want.second) < 1e-12,
                  "predict_next(" + state + ")");
    }
    oracle::Gen g(9);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto seqs = oracle::sequences(g, 100, 15, 12);
        for (double alpha : {0.0, 1.0}) {
            TransitionModel fit;
            try {
                fit = fit_transitions(seqs, alpha);
            } catch (const EmptyInput&) {
                continue;
            }
            for (std::size_t i = 0; i < fit.num_states(); ++i) {
                if (fit.absorbing[i]) continue;
                double row = 0;
                for (std::size_t j = 0; j < fit.num_states(); ++j) row += fit.probs(i, j);
                worst = std::max(worst, std::abs(row - 1.0));
            }
        }
    }
    v.require(worst <= 1e-9, "row sums");
    v.detail << "hand counts match, max |row-1| " << worst;
}

void checkpoint_round_trip(Verdict& v) {
    oracle::TempDir dir("accept-ckpt");
    const auto p = prepare(learnable_spec(4, 2, 200, 3), 12, 3);
    for (bool bi : {false, true}) {
        const auto cfg = model_for(p.vocab, 16, 12, bi);
        TrainConfig t;
        t.epochs = 3;
        const auto r = train(p.split, p.vocab, cfg, t);
        Checkpoint ck;
        ck.config = cfg;
        ck.params = r.final_params;
        ck.adam = r.adam;
        ck.vocab_hash = p.vocab.hash();
        save_model(dir / "m.ckpt", ck);
        const auto back = load_model(dir / "m.ckpt", p.vocab.hash());
        oracle::Gen g(bi ? 2 : 1);
        std::size_t identical = 0;
        for (int probe = 0; probe < 32; ++probe) {
            std::vector<int> tokens(cfg.seq_len);
            for (auto& x : tokens) x = static_cast<int>(oracle::pick(g, 0, static_cast<long>(cfg.vocab_size) - 1));
            const auto a = forward(ck.params, cfg, tokens).probs;
            const auto b = forward(back.params, back.config, tokens).probs;
            identical += a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
        }
        v.require(identical == 32, std::string(bi ? "BiLSTM" : "LSTM") + " probe mismatch");
        v.require(back.adam && *back.adam == *ck.adam, "Adam state");
        v.detail << (bi ? "BiLSTM " : "LSTM ") << identical << "/32 bit-identical ";
    }
}

void service_loop(Verdict& v) {
    oracle::TempDir dir("accept-service");
    fixture::Options o;
    o.faults = 8;
    o.turbines = 4;
    o.days = 730;
    o.seed = 21;
    o.dim = 32;
    o.target_len = 20;
    o.epochs = 50;
    const auto t = fixture::train_small(o);
    fixture::save_all(t, dir.path);

    ServiceConfig cfg;
    cfg.model_path = dir / "model.ckpt";
    cfg.vocab_path = dir / "vocab.json";
    cfg.markov_path = dir / "markov.json";
    cfg.dataset_path = dir / "dataset.jsonl";
    cfg.split_path = dir / "split.json";
    cfg.db_path = (dir / "a2a.db").string();
    cfg.sequencer = t.seq;
    cfg.train = t.train;
    cfg.api_token = "acceptance";
    RecommendationService svc(cfg, std::make_shared<SqliteStorage>(cfg.db_path));
    HttpApi api(svc);
    const int port = api.bind_to_any_port("127.0.0.1");
    v.require(port > 0, "bind");
    std::thread server([&] { api.listen_after_bind(); });
    api.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    client.set_default_headers({{"X-Api-Token", cfg.api_token}});
    client.set_read_timeout(60, 0);

    auto get = [&](const std::string& path) {
        auto r = client.Get(path.c_str());
        if (!r) throw std::runtime_error("GET " + path + " failed");
        return std::make_pair(r->status, json::parse(r->body));
    };
    auto post = [&](const std::string& path, const json& body) {
        auto r = client.Post(path, body.dump(), "application/json");
        if (!r) throw std::runtime_error("POST " + path + " failed");
        return std::make_pair(r->status, json::parse(r->body));
    };
    auto submit = [&](int turbine, const GroundTruth& g) {
        json events = json::array();
        for (const auto& a : g.cascade) events.push_back({{"time_on", format_timestamp(a.time)}, {"text", a.text}});
        const auto [status, body] = post("/api/v1/turbines/" + std::to_string(turbine) + "/alarms", events);
        if (status != 200 || body["persisted"] != g.cascade.size()) throw std::runtime_error("alarm submission");
        return get("/api/v1/turbines/" + std::to_string(turbine) + "/recommendations?k=3");
    };

    try {
        const auto& truth = t.corpus.ground_truth;
        const auto [s0, first] = submit(1000, truth.front());
        v.require(s0 == 200, "recommendation status");
        const auto top1 = first[0]["ranked"][0]["label"].get<std::string>();
        v.require(top1 == clean_text(truth.front().label), "top-1 " + top1);
        v.detail << "top-1 '" << top1 << "'";

        std::size_t correct = 0;
        for (int i = 0; i < 10; ++i) {
            const auto& g = truth[static_cast<std::size_t>(i + 1)];
            const auto [s, recs] = submit(1001 + i, g);
            v.require(s == 200, "recommendation " + std::to_string(i));
            correct += recs[0]["ranked"][0]["label"] == clean_text(g.label);
            const auto [fs, fb] = post("/api/v1/feedback", {{"recommendation_id", recs[0]["id"]},
                                                             {"rating", 1},
                                                             {"verdict", "reject"},
                                                             {"corrected_label", clean_text(g.label)},
                                                             {"actor", "acceptance"}});
            v.require(fs == 200 && fb["status"] == "corrected", "feedback " + std::to_string(i));
        }
        const auto [ss, before] = get("/api/v1/status");
        v.require(before["buffer_size"] == 10, "buffer before retrain");
        const auto [rs, started] = post("/api/v1/retrain", json::object());
        v.require(rs == 202 && started["state"] == "running", "retrain start");
        json after;
        for (int i = 0; i < 6000; ++i) {
            after = get("/api/v1/status").second;
            if (after["training"] == false) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        v.require(after["last_retrain"]["state"] == "accepted",
                  "retrain " + after["last_retrain"].value("state", std::string("?")) + ": " +
                      after["last_retrain"].value("message", std::string()));
        v.require(after["model_version"] == 2, "model version " + after["model_version"].dump());
        v.require(after["buffer_size"] == 0, "buffer after retrain " + after["buffer_size"].dump());
        const auto [s2, again] = submit(2000, truth[11]);
        v.require(s2 == 200 && again[0]["model_version"] == 2, "serving the new version");
        v.detail << ", " << correct << "/10 correct before feedback, version " << before["model_version"] << " -> "
                 << after["model_version"] << ", buffer " << before["buffer_size"] << " -> " << after["buffer_size"];
    } catch (...) {
        api.stop();
        server.join();
        throw;
    }
    api.stop();
    server.join();
}

}  // namespace

int main() {
    run("gradient-check", 10, gradient_check);
    run("softmax-bounds", 60, softmax_bounds);
    run("oracle-equivalence", 30, oracle_equivalence);
    run("learnable-convergence", 600, learnable_convergence);
    run("direction-benefit", 900, direction_benefit);
    run("split-partition", 60, split_partition);
    run("markov-model", 60, markov_model);
    run("checkpoint-round-trip", 60, checkpoint_round_trip);
    run("service-loop", 900, service_loop);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
