#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "alarm2action/random.hpp"
#include "alarm2action/sequencer.hpp"
#include "alarm2action/tensor.hpp"

namespace a2a {

/// Token and label dictionaries built from the training partition.
///
/// Each alarm text is one token (one embedding row). Index 0 is the pad
/// token and index 1 the unknown token; the remaining tokens follow in
/// lexicographic order, so two builds from the same corpus are identical.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnknown = 1;
    static constexpr std::string_view kUnknownToken = "<unk>";

    Vocabulary() : Vocabulary(std::vector<std::string>{}, std::vector<std::string>{}) {}
    /// `tokens` excludes pad/unknown; `labels` must be unique.
    Vocabulary(std::vector<std::string> tokens, std::vector<std::string> labels, std::string pad_token = "<pad>");

    std::size_t size() const noexcept { return index_to_token_.size(); }
    std::size_t num_labels() const noexcept { return labels_.size(); }

    int token_index(std::string_view token) const;
    const std::string& token(std::size_t index) const { return index_to_token_.at(index); }
    const std::vector<std::string>& tokens() const noexcept { return index_to_token_; }

    std::optional<int> label_index(std::string_view label) const;
    const std::string& label(std::size_t index) const { return labels_.at(index); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    const std::string& pad_token() const noexcept { return index_to_token_[kPad]; }

    /// Fingerprint over tokens and labels; checkpoints are bound to it.
    std::uint64_t hash() const;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.index_to_token_ == b.index_to_token_ && a.labels_ == b.labels_;
    }

private:
    std::vector<std::string> index_to_token_;
    std::unordered_map<std::string, int> token_to_index_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> label_to_index_;
};

/// Whitespace split; never yields empty tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Builds from training documents only. Throws EmptyCorpus.
Vocabulary build_vocab(const std::vector<PairedDocument>& docs, std::string pad_token = "<pad>");

struct EncodedDocument {
    std::vector<int> token_ids;
    int label_id = -1;
};

/// Maps tokens to indices (unknown → 1). Throws UnknownLabel when the label
/// is absent from the vocabulary.
EncodedDocument encode_document(const PairedDocument& doc, const Vocabulary& v);

/// As encode_document, but an unknown label yields label_id = -1.
EncodedDocument encode_document_lenient(const PairedDocument& doc, const Vocabulary& v);

std::vector<int> encode_tokens(const std::vector<std::string>& tokens, const Vocabulary& v);
std::vector<std::string> decode_tokens(const std::vector<int>& ids, const Vocabulary& v);

/// Uniform(-0.05, 0.05) embedding rows with the pad row zeroed.
Matrix random_embedding(const Vocabulary& v, std::size_t dim, Rng& rng);

struct EmbeddingLoad {
    Matrix matrix;
    std::size_t copied = 0;    // exact token match in the file
    std::size_t averaged = 0;  // multi-word alarm text built from its word vectors
    std::size_t random = 0;    // no coverage; random init (<unk> not counted)
};

/// Reads `token f1 ... fdim` lines. A vocabulary token matches a file token
/// exactly (spaces written as '_'); failing that, a multi-word alarm text
/// takes the mean of the vectors of its words that the file covers.
/// Uncovered rows are random, the pad row is zero. Throws DimensionMismatch.
EmbeddingLoad load_embedding_file(const std::filesystem::path& path, const Vocabulary& v, std::size_t dim,
                                  Rng& rng);

void save_vocab_json(const std::filesystem::path& path, const Vocabulary& v, std::size_t dim);
/// Returns the vocabulary and the stored embedding dim.
std::pair<Vocabulary, std::size_t> load_vocab_json(const std::filesystem::path& path);

}  // namespace a2a
