#include "spikecore/io/schedule.hpp"

#include <json.hpp>

#include "spikecore/error.hpp"
#include "spikecore/io/netlist.hpp"

namespace spikecore::io {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kFormat = "spikecore-schedule";

std::vector<std::vector<std::string>> parse_steps(const Json& list, const std::string& path)
{
    if (!list.is_array()) {
        throw Error(ErrorCode::ParseError, path + ": expected a list of steps");
    }
    std::vector<std::vector<std::string>> out;
    for (std::size_t t = 0; t < list.size(); ++t) {
        const auto& step = list[t];
        const auto p = path + "/" + std::to_string(t);
        if (!step.is_array()) {
            throw Error(ErrorCode::ParseError, p + ": expected a list of axon keys");
        }
        auto& keys = out.emplace_back();
        for (const auto& k : step) {
            if (!k.is_string()) {
                throw Error(ErrorCode::ParseError, p + ": axon keys must be strings");
            }
            keys.push_back(k.get<std::string>());
        }
    }
    return out;
}

} // namespace

Schedule parse_schedule(std::string_view text)
{
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("schedule: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", std::string{}) != kFormat) {
        throw Error(ErrorCode::ParseError, "/format: expected \"" + std::string(kFormat) + "\"");
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != 1) {
        throw Error(ErrorCode::ParseError, "/version: unsupported version (expected 1)");
    }
    const bool has_inf = doc.contains("inferences"), has_steps = doc.contains("steps");
    if (has_inf == has_steps) {
        throw Error(ErrorCode::ParseError, "/: exactly one of \"inferences\" or \"steps\" is required");
    }
    Schedule s;
    if (has_steps) {
        s.steps = parse_steps(doc["steps"], "/steps");
        if (!s.steps.empty()) {
            s.blocks.push_back(s.steps.size());
        }
        return s;
    }
    const auto& inf = doc["inferences"];
    if (!inf.is_array()) {
        throw Error(ErrorCode::ParseError, "/inferences: expected a list of blocks");
    }
    for (std::size_t i = 0; i < inf.size(); ++i) {
        auto block = parse_steps(inf[i], "/inferences/" + std::to_string(i));
        if (block.empty()) {
            throw Error(ErrorCode::ParseError, "/inferences/" + std::to_string(i) + ": empty inference block");
        }
        s.blocks.push_back(block.size());
        for (auto& step : block) {
            s.steps.push_back(std::move(step));
        }
    }
    return s;
}

Schedule load_schedule(const std::string& path)
{
    const auto text = read_text_file(path);
    try {
        return parse_schedule(text);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.detail());
    }
}

std::string to_schedule_json(const Schedule& s)
{
    std::string out = "{\"format\": \"" + std::string(kFormat) + "\", \"version\": 1, \"inferences\": [";
    std::size_t t = 0;
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
        out += b == 0 ? "\n " : ",\n ";
        Json block = Json::array();
        for (std::size_t k = 0; k < s.blocks[b]; ++k, ++t) {
            block.push_back(s.steps[t]);
        }
        out += block.dump();
    }
    out += s.blocks.empty() ? "]}\n" : "\n]}\n";
    return out;
}

Schedule fit_steps(Schedule s, std::size_t steps)
{
    if (steps >= s.steps.size()) {
        const auto extra = steps - s.steps.size();
        if (extra > 0) {
            s.steps.resize(steps);
            if (s.blocks.empty()) {
                s.blocks.push_back(extra);
            } else {
                s.blocks.back() += extra;
            }
        }
        return s;
    }
    s.steps.resize(steps);
    std::vector<std::size_t> blocks;
    std::size_t left = steps;
    for (auto b : s.blocks) {
        if (left == 0) {
            break;
        }
        blocks.push_back(std::min(b, left));
        left -= blocks.back();
    }
    s.blocks = std::move(blocks);
    return s;
}

} // namespace spikecore::io
