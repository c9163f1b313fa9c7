#include "alarm2action/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "alarm2action/errors.hpp"
#include "alarm2action/hashing.hpp"

namespace a2a {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', '2', 'A', 'C', 'K', 'P', 'T', '1'};

nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},       {"hidden_dim", c.hidden_dim},
            {"num_classes", c.num_classes}, {"bidirectional", c.bidirectional}, {"seq_len", c.seq_len}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.bidirectional = j.at("bidirectional").get<bool>();
    c.seq_len = j.at("seq_len").get<std::size_t>();
    return c;
}

void append_u64(std::string& buf, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    buf.append(b, 8);
}

std::uint64_t read_u64(const std::string& buf, std::size_t pos) {
    std::uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    return v;
}

void append_tensors(std::string& buf, const ModelParams& p) {
    for_each_tensor(p, [&](const std::string&, std::span<const double> t) {
        buf.append(reinterpret_cast<const char*>(t.data()), t.size_bytes());
    });
}

std::size_t read_tensors(const std::string& buf, std::size_t pos, ModelParams& p) {
    for_each_tensor(p, [&](const std::string& name, std::span<double> t) {
        if (pos + t.size_bytes() > buf.size()) throw CorruptCheckpoint("payload truncated in " + name);
        std::memcpy(t.data(), buf.data() + pos, t.size_bytes());
        pos += t.size_bytes();
    });
    return pos;
}

}  // namespace

void save_model(const std::filesystem::path& path, const Checkpoint& ckpt) {
    check_shapes(ckpt.params, ckpt.config);
    nlohmann::json header;
    header["format"] = 1;
    header["config"] = config_to_json(ckpt.config);
    header["vocab_hash"] = ckpt.vocab_hash;
    auto& tensors = header["tensors"] = nlohmann::json::array();
    for_each_tensor(ckpt.params, [&](const std::string& name, std::span<const double> t) {
        tensors.push_back({{"name", name}, {"size", t.size()}});
    });
    if (ckpt.adam) {
        check_shapes(ckpt.adam->m, ckpt.config);
        check_shapes(ckpt.adam->v, ckpt.config);
        header["adam"] = {{"t", ckpt.adam->t},
                          {"beta1", ckpt.adam->beta1},
                          {"beta2", ckpt.adam->beta2},
                          {"eps", ckpt.adam->eps}};
    }
    header["meta"] = ckpt.meta;

    const std::string header_text = header.dump();
    std::string buf(kMagic, sizeof kMagic);
    append_u64(buf, header_text.size());
    buf += header_text;
    append_tensors(buf, ckpt.params);
    if (ckpt.adam) {
        append_tensors(buf, ckpt.adam->m);
        append_tensors(buf, ckpt.adam->v);
    }
    Fnv1a sum;
    sum.update(std::as_bytes(std::span(buf.data(), buf.size())));
    append_u64(buf, sum.digest());

    // Write-then-rename so a crash never leaves a half-written checkpoint.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("IoError", "cannot write " + tmp.string());
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw Error("IoError", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof kMagic + 16 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
        throw CorruptCheckpoint(path.string() + ": bad magic or too short");
    }
    const std::size_t body = buf.size() - 8;
    Fnv1a sum;
    sum.update(std::as_bytes(std::span(buf.data(), body)));
    if (sum.digest() != read_u64(buf, body)) throw CorruptCheckpoint(path.string() + ": checksum mismatch");

    const std::uint64_t header_len = read_u64(buf, sizeof kMagic);
    std::size_t pos = sizeof kMagic + 8;
    if (header_len > body - pos) throw CorruptCheckpoint("header length out of range");

    Checkpoint ckpt;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(buf.substr(pos, header_len));
        ckpt.config = config_from_json(header.at("config"));
        ckpt.config.validate();
        ckpt.vocab_hash = header.at("vocab_hash").get<std::uint64_t>();
        ckpt.meta = header.value("meta", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw CorruptCheckpoint(std::string("header: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw CorruptCheckpoint(std::string("header: ") + e.what());
    }
    pos += header_len;

    ckpt.params = zeros_like(ckpt.config);
    std::size_t i = 0;
    const auto& declared = header.at("tensors");
    bool shapes_ok = declared.size() > 0;
    for_each_tensor(ckpt.params, [&](const std::string& name, std::span<const double> t) {
        if (i >= declared.size() || declared[i].value("name", "") != name ||
            declared[i].value("size", std::size_t{0}) != t.size()) {
            shapes_ok = false;
        }
        ++i;
    });
    if (!shapes_ok || i != declared.size()) throw CorruptCheckpoint("declared tensors do not match config");

    pos = read_tensors(buf, pos, ckpt.params);
    if (header.contains("adam")) {
        AdamState a;
        a.m = zeros_like(ckpt.config);
        a.v = zeros_like(ckpt.config);
        const auto& j = header["adam"];
        a.t = j.value("t", std::int64_t{0});
        a.beta1 = j.value("beta1", 0.9);
        a.beta2 = j.value("beta2", 0.999);
        a.eps = j.value("eps", 1e-8);
        pos = read_tensors(buf, pos, a.m);
        pos = read_tensors(buf, pos, a.v);
        ckpt.adam = std::move(a);
    }
    if (pos != body) throw CorruptCheckpoint("trailing bytes after payload");
    return ckpt;
}

Checkpoint load_model(const std::filesystem::path& path, std::uint64_t expected_vocab_hash) {
    auto ckpt = load_model(path);
    if (ckpt.vocab_hash != expected_vocab_hash) {
        throw VocabularyHashMismatch("checkpoint vocabulary " + std::to_string(ckpt.vocab_hash) +
                                     " != expected " + std::to_string(expected_vocab_hash));
    }
    return ckpt;
}

}  // namespace a2a
