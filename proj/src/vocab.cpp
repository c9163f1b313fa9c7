#include "alarm2action/vocab.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "alarm2action/errors.hpp"
#include "alarm2action/hashing.hpp"

namespace a2a {

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::string> labels, std::string pad_token) {
    index_to_token_.push_back(std::move(pad_token));
    index_to_token_.emplace_back(kUnknownToken);
    token_to_index_.emplace(index_to_token_[kPad], kPad);
    token_to_index_.emplace(index_to_token_[kUnknown], kUnknown);
    for (auto& t : tokens) {
        if (token_to_index_.count(t)) continue;
        token_to_index_.emplace(t, static_cast<int>(index_to_token_.size()));
        index_to_token_.push_back(std::move(t));
    }
    for (auto& l : labels) {
        if (!label_to_index_.emplace(l, static_cast<int>(labels_.size())).second) {
            throw InvalidArgument("duplicate label '" + l + "'");
        }
        labels_.push_back(std::move(l));
    }
}

int Vocabulary::token_index(std::string_view token) const {
    auto it = token_to_index_.find(std::string(token));
    return it == token_to_index_.end() ? kUnknown : it->second;
}

std::optional<int> Vocabulary::label_index(std::string_view label) const {
    auto it = label_to_index_.find(std::string(label));
    if (it == label_to_index_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t Vocabulary::hash() const {
    Fnv1a h;
    h.update_u64(index_to_token_.size());
    for (const auto& t : index_to_token_) h.update(t);
    h.update_u64(labels_.size());
    for (const auto& l : labels_) h.update(l);
    return h.digest();
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

Vocabulary build_vocab(const std::vector<PairedDocument>& docs, std::string pad_token) {
    if (docs.empty()) throw EmptyCorpus("no training documents");
    std::set<std::string> tokens, labels;
    for (const auto& d : docs) {
        for (const auto& t : d.alarm_tokens) {
            if (t != pad_token && t != Vocabulary::kUnknownToken) tokens.insert(t);
        }
        labels.insert(d.label);
    }
    return Vocabulary({tokens.begin(), tokens.end()}, {labels.begin(), labels.end()}, std::move(pad_token));
}

std::vector<int> encode_tokens(const std::vector<std::string>& tokens, const Vocabulary& v) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(v.token_index(t));
    return ids;
}

std::vector<std::string> decode_tokens(const std::vector<int>& ids, const Vocabulary& v) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(v.token(static_cast<std::size_t>(id)));
    return out;
}

EncodedDocument encode_document_lenient(const PairedDocument& doc, const Vocabulary& v) {
    EncodedDocument e;
    e.token_ids = encode_tokens(doc.alarm_tokens, v);
    e.label_id = v.label_index(doc.label).value_or(-1);
    return e;
}

EncodedDocument encode_document(const PairedDocument& doc, const Vocabulary& v) {
    auto e = encode_document_lenient(doc, v);
    if (e.label_id < 0) throw UnknownLabel(doc.label);
    return e;
}

Matrix random_embedding(const Vocabulary& v, std::size_t dim, Rng& rng) {
    Matrix m(v.size(), dim);
    for (std::size_t r = 1; r < m.rows; ++r) {
        for (auto& x : m.row(r)) x = uniform(rng, -0.05, 0.05);
    }
    return m;
}

EmbeddingLoad load_embedding_file(const std::filesystem::path& path, const Vocabulary& v, std::size_t dim,
                                  Rng& rng) {
    if (dim < 1) throw InvalidArgument("embedding dim must be >= 1");
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());

    std::unordered_map<std::string, std::vector<double>> vectors;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string token;
        if (!(ss >> token)) continue;
        std::vector<double> vec;
        double x;
        while (ss >> x) vec.push_back(x);
        if (!ss.eof()) throw DimensionMismatch(line_no, "non-numeric component");
        if (vec.size() != dim) {
            throw DimensionMismatch(line_no, "expected " + std::to_string(dim) + " components, got " +
                                                 std::to_string(vec.size()));
        }
        vectors.emplace(std::move(token), std::move(vec));
    }

    EmbeddingLoad out;
    out.matrix = random_embedding(v, dim, rng);
    for (std::size_t r = 2; r < v.size(); ++r) {
        std::string key = v.token(r);
        for (auto& c : key) {
            if (c == ' ') c = '_';
        }
        if (auto it = vectors.find(key); it != vectors.end()) {
            std::copy(it->second.begin(), it->second.end(), out.matrix.row(r).begin());
            ++out.copied;
            continue;
        }
        std::vector<double> sum(dim, 0.0);
        std::size_t hits = 0;
        for (const auto& w : tokenize(v.token(r))) {
            if (auto it = vectors.find(w); it != vectors.end()) {
                for (std::size_t k = 0; k < dim; ++k) sum[k] += it->second[k];
                ++hits;
            }
        }
        if (hits > 0 && tokenize(v.token(r)).size() > 1) {
            for (std::size_t k = 0; k < dim; ++k) out.matrix(r, k) = sum[k] / static_cast<double>(hits);
            ++out.averaged;
        } else {
            ++out.random;
        }
    }
    return out;
}

void save_vocab_json(const std::filesystem::path& path, const Vocabulary& v, std::size_t dim) {
    nlohmann::json j;
    j["pad_token"] = v.pad_token();
    j["tokens"] = std::vector<std::string>(v.tokens().begin() + 2, v.tokens().end());
    j["labels"] = v.labels();
    j["dim"] = dim;
    j["hash"] = v.hash();
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::pair<Vocabulary, std::size_t> load_vocab_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    try {
        auto j = nlohmann::json::parse(in);
        Vocabulary v(j.at("tokens").get<std::vector<std::string>>(), j.at("labels").get<std::vector<std::string>>(),
                     j.value("pad_token", std::string("<pad>")));
        return {std::move(v), j.value("dim", std::size_t{300})};
    } catch (const nlohmann::json::exception& e) {
        throw Error("IoError", path.string() + ": " + e.what());
    }
}

}  // namespace a2a
