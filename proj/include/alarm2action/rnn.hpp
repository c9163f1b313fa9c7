#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alarm2action/random.hpp"
#include "alarm2action/tensor.hpp"

namespace a2a {

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 300;
    std::size_t hidden_dim = 300;
    std::size_t num_classes = 0;
    bool bidirectional = false;
    std::size_t seq_len = 75;

    std::size_t num_directions() const noexcept { return bidirectional ? 2 : 1; }
    std::size_t feature_dim() const noexcept { return hidden_dim * num_directions(); }
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One LSTM direction. Gate blocks are stacked row-wise in the order
/// input, forget, cell candidate, output: rows [0,H) are the input gate,
/// [H,2H) forget, [2H,3H) candidate, [3H,4H) output.
struct LstmParams {
    Matrix W;               // 4H x E
    Matrix U;               // 4H x H
    std::vector<double> b;  // 4H

    friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

/// Every trainable tensor. Gradients and Adam moments share this layout.
struct ModelParams {
    Matrix embedding;                 // V x E, row 0 (pad) held at zero
    std::vector<LstmParams> lstm;     // [forward] or [forward, backward]
    Matrix dense_w;                   // C x H_out
    std::vector<double> dense_b;      // C

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

using Gradients = ModelParams;

/// Zero tensors shaped for `cfg`.
ModelParams zeros_like(const ModelConfig& cfg);

/// Embedding Uniform(-0.05, 0.05) with zero pad row; LSTM and dense weights
/// Uniform(-0.08, 0.08); biases zero except the forget gate at 1.0.
ModelParams init_params(const ModelConfig& cfg, Rng& rng);

/// Throws ShapeMismatch unless every tensor has the shape `cfg` declares.
void check_shapes(const ModelParams& p, const ModelConfig& cfg);

/// Calls f(name, span) for every tensor in a fixed order:
/// embedding, lstm.fwd.{W,U,b}, [lstm.bwd.{W,U,b}], dense.W, dense.b.
template <typename Params, typename F>
void for_each_tensor(Params& p, F&& f) {
    f(std::string("embedding"), std::span(p.embedding.data));
    for (std::size_t d = 0; d < p.lstm.size(); ++d) {
        const std::string prefix = d == 0 ? "lstm.fwd." : "lstm.bwd.";
        f(prefix + "W", std::span(p.lstm[d].W.data));
        f(prefix + "U", std::span(p.lstm[d].U.data));
        f(prefix + "b", std::span(p.lstm[d].b));
    }
    f(std::string("dense.W"), std::span(p.dense_w.data));
    f(std::string("dense.b"), std::span(p.dense_b));
}

/// Activations of one direction over one sequence.
struct DirectionCache {
    std::vector<int> tokens;  // in processing order
    Matrix gates;             // T x 4H, post-activation (i, f, g, o)
    Matrix cell;              // (T+1) x H, row 0 is the zero initial state
    Matrix hidden;            // (T+1) x H
    Matrix tanh_cell;         // T x H
};

struct ForwardCache {
    ModelConfig cfg;
    std::vector<int> token_ids;
    std::vector<DirectionCache> directions;
    std::vector<double> features;  // [h_fwd_last] or [h_fwd_last || h_bwd_last]
    std::vector<double> logits;
    std::vector<double> probs;
};

struct ForwardResult {
    std::vector<double> probs;
    ForwardCache cache;
};

/// Embedding lookup, (Bi)LSTM over the sequence, dense layer and softmax on
/// the last state(s). The backward direction reads the sequence reversed and
/// contributes its state after consuming the first token.
/// Throws ShapeMismatch / IndexOutOfVocab.
ForwardResult forward(const ModelParams& params, const ModelConfig& cfg, std::span<const int> token_ids);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

inline constexpr double kProbabilityFloor = 1e-12;

/// Cross-entropy -log(max(probs[label], 1e-12)). Throws LabelOutOfRange.
double loss(std::span<const double> probs, int label_id);

/// Adds this example's gradients into `grads` (which the caller zeroes).
/// The pad embedding row is left at zero. Throws CacheMismatch.
void accumulate_backward(const ModelParams& params, const ModelConfig& cfg, const ForwardCache& cache,
                         int label_id, Gradients& grads);

/// Gradient of loss(forward(token_ids), label_id) for every parameter.
Gradients backward(const ModelParams& params, const ModelConfig& cfg, const ForwardCache& cache, int label_id);

double global_norm(const Gradients& grads);

/// Global L2-norm clipping in place: when the norm exceeds `threshold`
/// every tensor is scaled by threshold / norm. Returns the pre-clip norm.
double clip_gradients(Gradients& grads, double threshold);

struct AdamState {
    ModelParams m;
    ModelParams v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

AdamState make_adam_state(const ModelConfig& cfg);

/// One bias-corrected Adam update. Throws NonFiniteGradient (leaving params
/// and state untouched) when any gradient entry is NaN or infinite.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr);

bool all_finite(const ModelParams& p);

}  // namespace a2a
