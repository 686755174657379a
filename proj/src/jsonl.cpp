#include "procau/jsonl.hpp"

#include <fstream>

#include <json.hpp>

namespace procau::causal {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw InputError("line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
}

template <typename T, typename ParseFn>
std::vector<T> load_lines(const std::filesystem::path& path, ParseFn&& parse) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        out.push_back(parse(line, line_no));
    }
    return out;
}

std::set<EventId> id_set(const json& arr, const char* field, std::size_t line_no) {
    if (!arr.is_array())
        throw InputError("line " + std::to_string(line_no) + ": '" + field + "' must be an array");
    std::set<EventId> out;
    for (const auto& v : arr) out.insert(v.get<std::string>());
    return out;
}

} // namespace

CausalSample parse_sample_json(const std::string& line, std::size_t line_no) {
    const json j = parse_line(line, line_no);
    try {
        CausalSample s;
        s.sample_id = j.at("sample_id").get<std::string>();
        for (const auto& c : j.at("candidates")) {
            EventDesc e;
            e.id = c.at("id").get<std::string>();
            e.text = c.value("text", std::string());
            s.candidates.push_back(std::move(e));
        }
        s.effect = j.at("effect").get<std::string>();
        s.cause_set = id_set(j.at("cause_set"), "cause_set", line_no);
        if (j.contains("fabricated_set"))
            s.fabricated_set = id_set(j.at("fabricated_set"), "fabricated_set", line_no);
        s.none_option = j.at("none_option").get<std::string>();
        s.finalize_and_validate();
        return s;
    } catch (const json::exception& e) {
        throw InputError("line " + std::to_string(line_no) + ": " + e.what());
    }
}

PredictionRecord parse_prediction_json(const std::string& line, std::size_t line_no) {
    const json j = parse_line(line, line_no);
    try {
        PredictionRecord p;
        p.sample_id = j.at("sample_id").get<std::string>();
        p.config = config_from_string(j.at("config").get<std::string>());
        p.none_flag = j.value("none", false);
        if (j.contains("predicted"))
            p.predicted = id_set(j.at("predicted"), "predicted", line_no);
        if (p.none_flag && !p.predicted.empty())
            throw InputError("line " + std::to_string(line_no) +
                             ": none:true alongside a predicted set");
        if (!p.none_flag && !j.contains("predicted"))
            throw InputError("line " + std::to_string(line_no) +
                             ": prediction needs 'predicted' or 'none': true");
        return p;
    } catch (const json::exception& e) {
        throw InputError("line " + std::to_string(line_no) + ": " + e.what());
    }
}

std::string sample_to_json(const CausalSample& s) {
    json j;
    j["sample_id"] = s.sample_id;
    json cands = json::array();
    for (const auto& c : s.candidates) cands.push_back({{"id", c.id}, {"text", c.text}});
    j["candidates"] = std::move(cands);
    j["effect"] = s.effect;
    j["cause_set"] = s.cause_set;
    j["fabricated_set"] = s.fabricated_set;
    j["none_option"] = s.none_option;
    return j.dump();
}

std::string prediction_to_json(const PredictionRecord& p) {
    json j;
    j["sample_id"] = p.sample_id;
    j["config"] = to_string(p.config);
    if (p.none_flag) {
        j["none"] = true;
    } else {
        j["predicted"] = p.predicted;
    }
    return j.dump();
}

std::vector<CausalSample> load_samples_jsonl(const std::filesystem::path& path) {
    return load_lines<CausalSample>(path, parse_sample_json);
}

std::vector<PredictionRecord> load_predictions_jsonl(const std::filesystem::path& path) {
    return load_lines<PredictionRecord>(path, parse_prediction_json);
}

void save_samples_jsonl(const std::filesystem::path& path,
                        const std::vector<CausalSample>& samples) {
    std::ofstream out(path);
    if (!out) throw InternalError("cannot write '" + path.string() + "'");
    for (const auto& s : samples) out << sample_to_json(s) << '\n';
}

void save_predictions_jsonl(const std::filesystem::path& path,
                            const std::vector<PredictionRecord>& preds) {
    std::ofstream out(path);
    if (!out) throw InternalError("cannot write '" + path.string() + "'");
    for (const auto& p : preds) out << prediction_to_json(p) << '\n';
}

} // namespace procau::causal
