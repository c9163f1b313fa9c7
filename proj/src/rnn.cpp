#include "alarm2action/rnn.hpp"

#include <algorithm>
#include <cmath>

#include "alarm2action/errors.hpp"

namespace a2a {

void ModelConfig::validate() const {
    if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1 || seq_len < 1) {
        throw InvalidArgument("model dimensions must be >= 1");
    }
    if (num_classes < 2) throw InvalidArgument("num_classes must be >= 2");
}

ModelParams zeros_like(const ModelConfig& cfg) {
    const std::size_t h = cfg.hidden_dim;
    ModelParams p;
    p.embedding = Matrix(cfg.vocab_size, cfg.embed_dim);
    p.lstm.resize(cfg.num_directions());
    for (auto& d : p.lstm) {
        d.W = Matrix(4 * h, cfg.embed_dim);
        d.U = Matrix(4 * h, h);
        d.b.assign(4 * h, 0.0);
    }
    p.dense_w = Matrix(cfg.num_classes, cfg.feature_dim());
    p.dense_b.assign(cfg.num_classes, 0.0);
    return p;
}

ModelParams init_params(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelParams p = zeros_like(cfg);
    for (std::size_t r = 1; r < p.embedding.rows; ++r) {
        for (auto& x : p.embedding.row(r)) x = uniform(rng, -0.05, 0.05);
    }
    const std::size_t h = cfg.hidden_dim;
    for (auto& d : p.lstm) {
        for (auto& x : d.W.data) x = uniform(rng, -0.08, 0.08);
        for (auto& x : d.U.data) x = uniform(rng, -0.08, 0.08);
        std::fill(d.b.begin() + h, d.b.begin() + 2 * h, 1.0);
    }
    for (auto& x : p.dense_w.data) x = uniform(rng, -0.08, 0.08);
    return p;
}

void check_shapes(const ModelParams& p, const ModelConfig& cfg) {
    const std::size_t h = cfg.hidden_dim;
    auto expect = [](bool ok, const char* what) {
        if (!ok) throw ShapeMismatch(what);
    };
    expect(p.embedding.rows == cfg.vocab_size && p.embedding.cols == cfg.embed_dim, "embedding shape");
    expect(p.lstm.size() == cfg.num_directions(), "lstm direction count");
    for (const auto& d : p.lstm) {
        expect(d.W.rows == 4 * h && d.W.cols == cfg.embed_dim, "lstm W shape");
        expect(d.U.rows == 4 * h && d.U.cols == h, "lstm U shape");
        expect(d.b.size() == 4 * h, "lstm b shape");
    }
    expect(p.dense_w.rows == cfg.num_classes && p.dense_w.cols == cfg.feature_dim(), "dense W shape");
    expect(p.dense_b.size() == cfg.num_classes, "dense b shape");
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void run_direction(const LstmParams& p, const Matrix& embedding, std::vector<int> tokens, std::size_t hidden,
                   DirectionCache& dc) {
    const std::size_t T = tokens.size();
    const std::size_t H = hidden;
    const std::size_t E = embedding.cols;
    dc.tokens = std::move(tokens);
    dc.gates = Matrix(T, 4 * H);
    dc.cell = Matrix(T + 1, H);
    dc.hidden = Matrix(T + 1, H);
    dc.tanh_cell = Matrix(T, H);

    std::vector<double> z(4 * H);
    for (std::size_t t = 0; t < T; ++t) {
        const double* x = embedding.row(static_cast<std::size_t>(dc.tokens[t])).data();
        const double* h_prev = dc.hidden.row(t).data();
        for (std::size_t r = 0; r < 4 * H; ++r) {
            z[r] = p.b[r] + dot(p.W.row(r).data(), x, E) + dot(p.U.row(r).data(), h_prev, H);
        }
        double* gates = dc.gates.row(t).data();
        for (std::size_t k = 0; k < H; ++k) {
            gates[k] = sigmoid(z[k]);
            gates[H + k] = sigmoid(z[H + k]);
            gates[2 * H + k] = std::tanh(z[2 * H + k]);
            gates[3 * H + k] = sigmoid(z[3 * H + k]);
        }
        const double* c_prev = dc.cell.row(t).data();
        double* c = dc.cell.row(t + 1).data();
        double* h = dc.hidden.row(t + 1).data();
        double* tc = dc.tanh_cell.row(t).data();
        for (std::size_t k = 0; k < H; ++k) {
            c[k] = gates[H + k] * c_prev[k] + gates[k] * gates[2 * H + k];
            tc[k] = std::tanh(c[k]);
            h[k] = gates[3 * H + k] * tc[k];
        }
    }
}

// BPTT for one direction given dL/dh at the final step.
void backprop_direction(const LstmParams& p, const DirectionCache& dc, std::span<const double> dh_last,
                        std::size_t hidden, const Matrix& embedding, LstmParams& g, Matrix& d_embedding) {
    const std::size_t T = dc.tokens.size();
    const std::size_t H = hidden;
    const std::size_t E = embedding.cols;
    std::vector<double> dh(dh_last.begin(), dh_last.end());
    std::vector<double> dc_next(H, 0.0);
    std::vector<double> dz(4 * H);
    std::vector<double> dh_prev(H);

    for (std::size_t t = T; t-- > 0;) {
        const double* gates = dc.gates.row(t).data();
        const double* c_prev = dc.cell.row(t).data();
        const double* tc = dc.tanh_cell.row(t).data();
        for (std::size_t k = 0; k < H; ++k) {
            const double i = gates[k], f = gates[H + k], gg = gates[2 * H + k], o = gates[3 * H + k];
            const double d_o = dh[k] * tc[k];
            const double d_c = dc_next[k] + dh[k] * o * (1.0 - tc[k] * tc[k]);
            dz[k] = d_c * gg * i * (1.0 - i);
            dz[H + k] = d_c * c_prev[k] * f * (1.0 - f);
            dz[2 * H + k] = d_c * i * (1.0 - gg * gg);
            dz[3 * H + k] = d_o * o * (1.0 - o);
            dc_next[k] = d_c * f;
        }
        const std::size_t token = static_cast<std::size_t>(dc.tokens[t]);
        const double* x = embedding.row(token).data();
        const double* h_prev = dc.hidden.row(t).data();
        double* dx = d_embedding.row(token).data();
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (std::size_t r = 0; r < 4 * H; ++r) {
            const double d = dz[r];
            if (d == 0.0) continue;
            g.b[r] += d;
            axpy(d, x, g.W.row(r).data(), E);
            axpy(d, h_prev, g.U.row(r).data(), H);
            axpy(d, p.W.row(r).data(), dx, E);
            axpy(d, p.U.row(r).data(), dh_prev.data(), H);
        }
        dh.swap(dh_prev);
    }
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (auto& x : out) x /= sum;
    return out;
}

ForwardResult forward(const ModelParams& params, const ModelConfig& cfg, std::span<const int> token_ids) {
    check_shapes(params, cfg);
    if (token_ids.size() != cfg.seq_len) {
        throw ShapeMismatch("expected " + std::to_string(cfg.seq_len) + " tokens, got " +
                            std::to_string(token_ids.size()));
    }
    for (int id : token_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
            throw IndexOutOfVocab("token id " + std::to_string(id));
        }
    }

    ForwardResult r;
    ForwardCache& c = r.cache;
    c.cfg = cfg;
    c.token_ids.assign(token_ids.begin(), token_ids.end());
    c.directions.resize(cfg.num_directions());
    const std::size_t H = cfg.hidden_dim;
    c.features.assign(cfg.feature_dim(), 0.0);

    run_direction(params.lstm[0], params.embedding, c.token_ids, H, c.directions[0]);
    std::copy_n(c.directions[0].hidden.row(cfg.seq_len).begin(), H, c.features.begin());
    if (cfg.bidirectional) {
        std::vector<int> reversed(c.token_ids.rbegin(), c.token_ids.rend());
        run_direction(params.lstm[1], params.embedding, std::move(reversed), H, c.directions[1]);
        std::copy_n(c.directions[1].hidden.row(cfg.seq_len).begin(), H, c.features.begin() + H);
    }

    c.logits.resize(cfg.num_classes);
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
        c.logits[k] = params.dense_b[k] + dot(params.dense_w.row(k).data(), c.features.data(), c.features.size());
    }
    c.probs = softmax(c.logits);
    r.probs = c.probs;
    return r;
}

double loss(std::span<const double> probs, int label_id) {
    if (label_id < 0 || static_cast<std::size_t>(label_id) >= probs.size()) {
        throw LabelOutOfRange("label " + std::to_string(label_id));
    }
    return -std::log(std::max(probs[static_cast<std::size_t>(label_id)], kProbabilityFloor));
}

void accumulate_backward(const ModelParams& params, const ModelConfig& cfg, const ForwardCache& cache,
                         int label_id, Gradients& grads) {
    if (!(cache.cfg == cfg) || cache.directions.size() != cfg.num_directions() ||
        cache.token_ids.size() != cfg.seq_len || cache.probs.size() != cfg.num_classes) {
        throw CacheMismatch("forward cache does not match model config");
    }
    if (label_id < 0 || static_cast<std::size_t>(label_id) >= cfg.num_classes) {
        throw LabelOutOfRange("label " + std::to_string(label_id));
    }
    const std::size_t H = cfg.hidden_dim;
    const std::size_t F = cfg.feature_dim();

    // Softmax + cross-entropy: dL/dlogits = p - onehot(label).
    std::vector<double> d_logits(cache.probs);
    d_logits[static_cast<std::size_t>(label_id)] -= 1.0;

    std::vector<double> d_features(F, 0.0);
    for (std::size_t k = 0; k < cfg.num_classes; ++k) {
        const double d = d_logits[k];
        grads.dense_b[k] += d;
        axpy(d, cache.features.data(), grads.dense_w.row(k).data(), F);
        axpy(d, params.dense_w.row(k).data(), d_features.data(), F);
    }
    for (std::size_t d = 0; d < cfg.num_directions(); ++d) {
        backprop_direction(params.lstm[d], cache.directions[d], std::span(d_features).subspan(d * H, H), H,
                           params.embedding, grads.lstm[d], grads.embedding);
    }
    std::fill(grads.embedding.row(0).begin(), grads.embedding.row(0).end(), 0.0);
}

Gradients backward(const ModelParams& params, const ModelConfig& cfg, const ForwardCache& cache, int label_id) {
    Gradients g = zeros_like(cfg);
    accumulate_backward(params, cfg, cache, label_id, g);
    return g;
}

double global_norm(const Gradients& grads) {
    double sq = 0;
    for_each_tensor(grads, [&](const std::string&, std::span<const double> t) {
        for (double x : t) sq += x * x;
    });
    return std::sqrt(sq);
}

double clip_gradients(Gradients& grads, double threshold) {
    if (!(threshold > 0)) throw InvalidArgument("clip threshold must be > 0");
    const double norm = global_norm(grads);
    if (norm > threshold) {
        const double scale = threshold / norm;
        for_each_tensor(grads, [&](const std::string&, std::span<double> t) {
            for (auto& x : t) x *= scale;
        });
    }
    return norm;
}

AdamState make_adam_state(const ModelConfig& cfg) {
    AdamState s;
    s.m = zeros_like(cfg);
    s.v = zeros_like(cfg);
    return s;
}

bool all_finite(const ModelParams& p) {
    bool ok = true;
    for_each_tensor(p, [&](const std::string&, std::span<const double> t) {
        for (double x : t) ok = ok && std::isfinite(x);
    });
    return ok;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr) {
    if (!all_finite(grads)) throw NonFiniteGradient("gradient contains NaN or Inf");

    std::vector<std::span<double>> p_t, m_t, v_t;
    std::vector<std::span<const double>> g_t;
    for_each_tensor(params, [&](const std::string&, std::span<double> t) { p_t.push_back(t); });
    for_each_tensor(state.m, [&](const std::string&, std::span<double> t) { m_t.push_back(t); });
    for_each_tensor(state.v, [&](const std::string&, std::span<double> t) { v_t.push_back(t); });
    for_each_tensor(grads, [&](const std::string&, std::span<const double> t) { g_t.push_back(t); });
    if (p_t.size() != g_t.size() || p_t.size() != m_t.size() || p_t.size() != v_t.size()) {
        throw ShapeMismatch("adam tensors do not align");
    }
    for (std::size_t i = 0; i < p_t.size(); ++i) {
        if (p_t[i].size() != g_t[i].size() || p_t[i].size() != m_t[i].size() || p_t[i].size() != v_t[i].size()) {
            throw ShapeMismatch("adam tensor sizes do not align");
        }
    }

    ++state.t;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < p_t.size(); ++i) {
        auto p = p_t[i];
        auto m = m_t[i];
        auto v = v_t[i];
        auto g = g_t[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double m_hat = m[k] / c1;
            const double v_hat = v[k] / c2;
            p[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

}  // namespace a2a
