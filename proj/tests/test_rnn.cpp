#include <doctest.h>

#include <cmath>

#include "alarm2action/errors.hpp"
#include "alarm2action/rnn.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace a2a;

namespace {

ModelConfig tiny(bool bi) {
    ModelConfig cfg;
    cfg.vocab_size = 7;
    cfg.embed_dim = 3;
    cfg.hidden_dim = 4;
    cfg.num_classes = 3;
    cfg.seq_len = 5;
    cfg.bidirectional = bi;
    return cfg;
}

std::vector<int> random_tokens(Rng& rng, const ModelConfig& cfg) {
    std::vector<int> t(cfg.seq_len);
    for (auto& x : t) x = static_cast<int>(uniform_index(rng, cfg.vocab_size));
    return t;
}

double sum(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

TEST_CASE("init_params shapes and ranges") {
    for (bool bi : {false, true}) {
        const auto cfg = tiny(bi);
        Rng rng(1);
        const auto p = init_params(cfg, rng);
        CHECK_NOTHROW(check_shapes(p, cfg));
        CHECK(p.lstm.size() == cfg.num_directions());
        CHECK(p.dense_w.cols == cfg.feature_dim());
        for (std::size_t c = 0; c < cfg.embed_dim; ++c) CHECK(p.embedding(0, c) == 0.0);
        for (const auto& l : p.lstm) {
            for (std::size_t j = 0; j < 4 * cfg.hidden_dim; ++j) {
                const bool forget = j >= cfg.hidden_dim && j < 2 * cfg.hidden_dim;
                CHECK(l.b[j] == (forget ? 1.0 : 0.0));
            }
            for (double w : l.W.data) CHECK(std::abs(w) <= 0.08);
        }
    }
    ModelConfig bad = tiny(false);
    bad.num_classes = 1;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("forward input errors") {
    const auto cfg = tiny(false);
    Rng rng(2);
    const auto p = init_params(cfg, rng);
    CHECK_THROWS_AS(forward(p, cfg, std::vector<int>{1, 2}), ShapeMismatch);
    CHECK_THROWS_AS(forward(p, cfg, std::vector<int>{1, 2, 3, 4, 7}), IndexOutOfVocab);
    CHECK_THROWS_AS(forward(p, cfg, std::vector<int>{1, 2, 3, 4, -1}), IndexOutOfVocab);
    auto wrong = tiny(true);
    CHECK_THROWS_AS(forward(p, wrong, std::vector<int>{1, 2, 3, 4, 5}), ShapeMismatch);
}

TEST_CASE("zero weights give uniform probabilities") {
    for (bool bi : {false, true}) {
        const auto cfg = tiny(bi);
        const auto p = zeros_like(cfg);
        const auto probs = forward(p, cfg, std::vector<int>{0, 1, 2, 3, 4}).probs;
        for (double q : probs) CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
}

TEST_CASE("forward matches the scalar oracle on a hand-set model") {
    ModelConfig cfg;
    cfg.vocab_size = 3;
    cfg.embed_dim = 2;
    cfg.hidden_dim = 2;
    cfg.num_classes = 2;
    cfg.seq_len = 2;
    auto p = zeros_like(cfg);
    p.embedding.data = {0, 0, 0.5, -1.0, 1.5, 0.25};
    p.lstm[0].W.data = {0.1, -0.2, 0.3, 0.4, 0.5, 0.6, -0.7, 0.8, 0.9, -1.0, 0.2, 0.1, -0.3, 0.3, 0.6, -0.6};
    p.lstm[0].U.data = {0.2, 0.1, -0.1, 0.4, 0.3, -0.2, 0.5, 0.5, -0.4, 0.2, 0.1, 0.1, 0.7, -0.3, 0.2, 0.2};
    p.lstm[0].b = {0.1, -0.1, 1.0, 1.0, 0.0, 0.2, -0.2, 0.3};
    p.dense_w.data = {1.0, -2.0, 0.5, 0.75};
    p.dense_b = {0.1, -0.1};
    const std::vector<int> tokens = {1, 2};
    const auto got = forward(p, cfg, tokens).probs;
    const auto want = oracle::forward(p, cfg, tokens);
    for (std::size_t k = 0; k < 2; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-14));

    // Hand evaluation of the first step for unit 0: x = (0.5, -1).
    const double zi = 0.1 * 0.5 + -0.2 * -1.0 + 0.1, zg = 0.9 * 0.5 + -1.0 * -1.0 + 0.0;
    const double zo = -0.3 * 0.5 + 0.3 * -1.0 - 0.2;
    const double c = oracle::sigmoid(zi) * std::tanh(zg);
    const double h = oracle::sigmoid(zo) * std::tanh(c);
    const auto cache = forward(p, cfg, tokens).cache;
    CHECK(cache.directions[0].hidden(1, 0) == doctest::Approx(h).epsilon(1e-14));
}

TEST_CASE("property: forward matches the scalar oracle on random models") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        ModelConfig cfg;
        cfg.vocab_size = 2 + uniform_index(rng, 8);
        cfg.embed_dim = 1 + uniform_index(rng, 5);
        cfg.hidden_dim = 1 + uniform_index(rng, 5);
        cfg.num_classes = 2 + uniform_index(rng, 4);
        cfg.seq_len = 1 + uniform_index(rng, 8);
        cfg.bidirectional = trial % 2 == 1;
        auto p = init_params(cfg, rng);
        for_each_tensor(p, [&](const std::string& name, std::span<double> t) {
            for (std::size_t i = name == "embedding" ? cfg.embed_dim : 0; i < t.size(); ++i) t[i] = uniform(rng, -1, 1);
        });
        const auto tokens = random_tokens(rng, cfg);
        const auto got = forward(p, cfg, tokens).probs;
        const auto want = oracle::forward(p, cfg, tokens);
        for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
}

TEST_CASE("property: softmax is a distribution and hidden states are bounded") {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        const auto cfg = tiny(trial % 2 == 0);
        auto p = init_params(cfg, rng);
        for_each_tensor(p, [&](const std::string& name, std::span<double> t) {
            for (std::size_t i = name == "embedding" ? cfg.embed_dim : 0; i < t.size(); ++i) t[i] = uniform(rng, -5, 5);
        });
        const auto r = forward(p, cfg, random_tokens(rng, cfg));
        CHECK(std::abs(sum(r.probs) - 1.0) <= 1e-9);
        for (double q : r.probs) CHECK((q >= 0.0 && q <= 1.0));
        for (const auto& d : r.cache.directions)
            for (double h : d.hidden.data) CHECK(std::abs(h) <= 1.0);
    }
    const auto extreme = softmax(std::vector<double>{1000.0, -1000.0, 0.0});
    CHECK(extreme[0] == doctest::Approx(1.0));
    CHECK(std::isfinite(extreme[1]));
}

TEST_CASE("forward is deterministic") {
    const auto cfg = tiny(true);
    Rng rng(5);
    const auto p = init_params(cfg, rng);
    const auto tokens = random_tokens(rng, cfg);
    CHECK(forward(p, cfg, tokens).probs == forward(p, cfg, tokens).probs);
}

TEST_CASE("loss examples") {
    CHECK(loss(std::vector<double>{0.0, 1.0}, 1) == 0.0);
    CHECK(loss(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 2) == doctest::Approx(1.3862943611));
    CHECK(loss(std::vector<double>{1.0, 0.0}, 1) == doctest::Approx(27.6310211159));
    CHECK_THROWS_AS(loss(std::vector<double>{1.0, 0.0}, 2), LabelOutOfRange);
    CHECK_THROWS_AS(loss(std::vector<double>{1.0, 0.0}, -1), LabelOutOfRange);
}

TEST_CASE("gradients match finite differences") {
    for (bool bi : {false, true}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto rep = gradcheck::run(tiny(bi), seed);
            CAPTURE(bi);
            CAPTURE(seed);
            CAPTURE(rep.worst);
            CAPTURE(rep.max_rel_error);
            CHECK(rep.failures == 0);
            CHECK(rep.pad_row_zero);
            CHECK(rep.entries > 100);
        }
    }
}

TEST_CASE("backward special cases") {
    const auto cfg = tiny(false);
    Rng rng(6);
    const auto p = init_params(cfg, rng);
    const std::vector<int> tokens = {0, 2, 2, 3, 2};
    const auto fwd = forward(p, cfg, tokens);
    const auto g = backward(p, cfg, fwd.cache, 1);
    for (std::size_t row : {0, 1, 4, 5, 6})
        for (std::size_t c = 0; c < cfg.embed_dim; ++c) CHECK(g.embedding(row, c) == 0.0);

    auto cache = fwd.cache;
    cache.probs = {0.0, 1.0, 0.0};
    const auto onehot = backward(p, cfg, cache, 1);
    for (double x : onehot.dense_w.data) CHECK(x == 0.0);
    for (double x : onehot.dense_b) CHECK(x == 0.0);

    CHECK_THROWS_AS(backward(p, tiny(true), fwd.cache, 1), CacheMismatch);
    CHECK_THROWS_AS(backward(p, cfg, fwd.cache, 3), LabelOutOfRange);
}

TEST_CASE("bidirectional with a silenced backward half equals unidirectional") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto uni = tiny(false);
        const auto bi = tiny(true);
        const auto pu = init_params(uni, rng);
        auto pb = init_params(bi, rng);
        pb.embedding = pu.embedding;
        pb.lstm[0] = pu.lstm[0];
        for (auto* m : {&pb.lstm[1].W, &pb.lstm[1].U}) std::fill(m->data.begin(), m->data.end(), 0.0);
        std::fill(pb.lstm[1].b.begin(), pb.lstm[1].b.end(), 0.0);
        for (std::size_t k = 0; k < bi.num_classes; ++k) {
            for (std::size_t j = 0; j < bi.hidden_dim; ++j) {
                pb.dense_w(k, j) = pu.dense_w(k, j);
                pb.dense_w(k, bi.hidden_dim + j) = 0.0;
            }
        }
        pb.dense_b = pu.dense_b;
        const auto tokens = random_tokens(rng, uni);
        CHECK(forward(pb, bi, tokens).probs == forward(pu, uni, tokens).probs);
    }
}

TEST_CASE("clip_gradients") {
    const auto cfg = tiny(false);
    auto g = zeros_like(cfg);
    g.dense_b = {2.0, 0.0, 0.0};
    auto copy = g;
    CHECK(clip_gradients(g, 1.0) == doctest::Approx(2.0));
    CHECK(g.dense_b[0] == doctest::Approx(1.0));
    CHECK(global_norm(g) == doctest::Approx(1.0).epsilon(1e-12));

    copy.dense_b = {0.3, 0.4, 0.0};
    const auto before = copy;
    CHECK(clip_gradients(copy, 1.0) == doctest::Approx(0.5));
    CHECK(copy == before);

    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        auto r = zeros_like(cfg);
        const double scale = uniform(rng, 0.0, 3.0);
        for_each_tensor(r, [&](const std::string&, std::span<double> t) {
            for (auto& x : t) x = uniform(rng, -scale, scale);
        });
        const double th = uniform(rng, 0.1, 2.0);
        const double norm = clip_gradients(r, th);
        CHECK(std::abs(global_norm(r) - std::min(norm, th)) <= 1e-9);
    }
}

TEST_CASE("adam_step") {
    ModelConfig cfg = tiny(false);
    SUBCASE("one step with unit gradient moves every weight by lr") {
        auto p = zeros_like(cfg);
        auto g = zeros_like(cfg);
        g.dense_b = {1.0, 0.0, 0.0};
        auto st = make_adam_state(cfg);
        adam_step(p, g, st, 0.01);
        CHECK(st.t == 1);
        // m_hat = 1, v_hat = 1: delta = -0.01 / (1 + 1e-8).
        CHECK(p.dense_b[0] == doctest::Approx(-0.01 / (1.0 + 1e-8)).epsilon(1e-12));
        CHECK(p.dense_b[1] == 0.0);
    }
    SUBCASE("zero gradient leaves params but counts the step") {
        Rng rng(9);
        auto p = init_params(cfg, rng);
        const auto before = p;
        auto st = make_adam_state(cfg);
        adam_step(p, zeros_like(cfg), st, 0.01);
        CHECK(p == before);
        CHECK(st.t == 1);
    }
    SUBCASE("pure") {
        Rng rng(10);
        auto p1 = init_params(cfg, rng);
        auto p2 = p1;
        auto g = init_params(cfg, rng);
        auto s1 = make_adam_state(cfg), s2 = make_adam_state(cfg);
        adam_step(p1, g, s1, 0.01);
        adam_step(p2, g, s2, 0.01);
        CHECK(p1 == p2);
        CHECK(s1 == s2);
    }
    SUBCASE("non-finite gradient changes nothing") {
        Rng rng(11);
        auto p = init_params(cfg, rng);
        const auto before = p;
        auto g = zeros_like(cfg);
        g.dense_b[1] = std::nan("");
        auto st = make_adam_state(cfg);
        const auto st_before = st;
        CHECK_THROWS_AS(adam_step(p, g, st, 0.01), NonFiniteGradient);
        CHECK(p == before);
        CHECK(st.t == st_before.t);
        CHECK(all_finite(p));
    }
}

TEST_CASE("one small Adam step lowers the loss of a frozen batch") {
    for (bool bi : {false, true}) {
        const auto cfg = tiny(bi);
        Rng rng(12);
        auto p = init_params(cfg, rng);
        std::vector<std::vector<int>> batch;
        std::vector<int> labels;
        for (int i = 0; i < 8; ++i) {
            batch.push_back(random_tokens(rng, cfg));
            labels.push_back(static_cast<int>(uniform_index(rng, cfg.num_classes)));
        }
        auto batch_loss = [&](const ModelParams& q) {
            double total = 0;
            for (std::size_t i = 0; i < batch.size(); ++i) total += loss(forward(q, cfg, batch[i]).probs, labels[i]);
            return total / static_cast<double>(batch.size());
        };
        auto g = zeros_like(cfg);
        for (std::size_t i = 0; i < batch.size(); ++i)
            accumulate_backward(p, cfg, forward(p, cfg, batch[i]).cache, labels[i], g);
        for_each_tensor(g, [&](const std::string&, std::span<double> t) {
            for (auto& x : t) x /= static_cast<double>(batch.size());
        });
        const double before = batch_loss(p);
        auto st = make_adam_state(cfg);
        adam_step(p, g, st, 1e-3);
        CHECK(batch_loss(p) < before);
    }
}
