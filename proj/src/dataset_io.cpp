#include "alarm2action/dataset_io.hpp"

#include <fstream>
#include <regex>

#include "alarm2action/errors.hpp"

namespace a2a {

nlohmann::json to_json(const PairedDocument& d) {
    return {{"turbine_id", d.turbine_id},
            {"response_time", format_timestamp(d.response_time)},
            {"label", d.label},
            {"alarm_tokens", d.alarm_tokens}};
}

PairedDocument document_from_json(const nlohmann::json& j) {
    PairedDocument d;
    d.turbine_id = j.at("turbine_id").get<int>();
    auto t = parse_timestamp(j.at("response_time").get<std::string>());
    if (!t) throw ValidationError("bad response_time");
    d.response_time = *t;
    d.label = j.at("label").get<std::string>();
    d.alarm_tokens = j.at("alarm_tokens").get<std::vector<std::string>>();
    return d;
}

void write_dataset_jsonl(const std::filesystem::path& path, const std::vector<PairedDocument>& docs) {
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    for (const auto& d : docs) out << to_json(d).dump() << '\n';
}

std::vector<PairedDocument> read_dataset_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    std::vector<PairedDocument> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            docs.push_back(document_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line_no, e.what());
        } catch (const ValidationError& e) {
            throw MalformedRow(line_no, e.what());
        }
    }
    return docs;
}

void write_split_json(const std::filesystem::path& path, const SplitIndices& split) {
    nlohmann::json j{{"train", split.train},
                     {"validation", split.validation},
                     {"test", split.test},
                     {"holdout", split.holdout}};
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    out << j.dump() << '\n';
}

SplitIndices read_split_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    try {
        auto j = nlohmann::json::parse(in);
        SplitIndices s;
        s.train = j.at("train").get<std::vector<std::size_t>>();
        s.validation = j.at("validation").get<std::vector<std::size_t>>();
        s.test = j.at("test").get<std::vector<std::size_t>>();
        s.holdout = j.value("holdout", std::vector<std::size_t>{});
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error("IoError", path.string() + ": " + e.what());
    }
}

std::map<int, std::filesystem::path> find_turbine_files(const std::filesystem::path& dir, const std::string& prefix) {
    std::map<int, std::filesystem::path> out;
    const std::regex pattern(prefix + R"(_T(\d+)\.csv)");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) out.emplace(std::stoi(m[1].str()), entry.path());
    }
    return out;
}

}  // namespace a2a
