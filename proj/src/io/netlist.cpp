#include "spikecore/io/netlist.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "spikecore/error.hpp"

namespace spikecore::io {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kFormat = "spikecore-netlist";

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

/// Best-effort line of `"key"` appearing after `"section"`.
std::string where(std::string_view text, std::string_view section, std::string_view key)
{
    std::size_t from = 0;
    if (!section.empty()) {
        const auto s = text.find("\"" + std::string(section) + "\"");
        from = s == std::string_view::npos ? 0 : s;
    }
    // Prefer an occurrence used as a member name over one used as a value.
    const std::string quoted = "\"" + std::string(key) + "\"";
    const auto first = text.find(quoted, from);
    if (first == std::string_view::npos) {
        return {};
    }
    auto k = first;
    for (; k != std::string_view::npos; k = text.find(quoted, k + 1)) {
        auto after = text.find_first_not_of(" \t\r\n", k + quoted.size());
        if (after != std::string_view::npos && text[after] == ':') {
            break;
        }
    }
    if (k == std::string_view::npos) {
        k = first;
    }
    return " (line " + std::to_string(line_col(text, k).first) + ")";
}

[[noreturn]] void fail(ErrorCode code, const std::string& path, const std::string& msg, const std::string& loc = {})
{
    throw Error(code, path + ": " + msg + loc);
}

std::int64_t as_int(const Json& v, const std::string& path, ErrorCode overflow_code)
{
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            fail(overflow_code, path, "integer out of range");
        }
        return static_cast<std::int64_t>(u);
    }
    if (!v.is_number_integer()) {
        fail(ErrorCode::ParseError, path, "expected an integer");
    }
    return v.get<std::int64_t>();
}

std::vector<SynapseDef> parse_synapses(const Json& list, const std::string& path)
{
    if (!list.is_array()) {
        fail(ErrorCode::ParseError, path, "expected a list of [post, weight] pairs");
    }
    std::vector<SynapseDef> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto p = path + "/" + std::to_string(i);
        const auto& e = list[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_string()) {
            fail(ErrorCode::ParseError, p, "expected [post, weight]");
        }
        out.push_back({e[0].get<std::string>(), as_int(e[1], p + "/1", ErrorCode::WeightOverflow)});
    }
    return out;
}

Json parse_json(std::string_view text)
{
    // Track member names per nesting level; the library keeps only the last
    // of repeated members, which would hide duplicate keys.
    std::vector<std::set<std::string>> seen;
    std::string duplicate;
    auto cb = [&](int, Json::parse_event_t ev, Json& parsed) {
        switch (ev) {
        case Json::parse_event_t::object_start:
            seen.emplace_back();
            break;
        case Json::parse_event_t::object_end:
            if (!seen.empty()) {
                seen.pop_back();
            }
            break;
        case Json::parse_event_t::key:
            if (!seen.empty() && !seen.back().insert(parsed.get<std::string>()).second && duplicate.empty()) {
                duplicate = parsed.get<std::string>();
            }
            break;
        default:
            break;
        }
        return true;
    };
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end(), cb);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                                               ": " + e.what());
    }
    if (!duplicate.empty()) {
        throw Error(ErrorCode::DuplicateKey, "key '" + duplicate + "' repeated in one object" +
                                                 where(text, {}, duplicate));
    }
    return doc;
}

} // namespace

Network parse_netlist(std::string_view text)
{
    const Json doc = parse_json(text);
    if (!doc.is_object()) {
        fail(ErrorCode::ParseError, "/", "netlist must be a JSON object");
    }
    if (doc.value("format", std::string{}) != kFormat) {
        fail(ErrorCode::ParseError, "/format", "expected \"" + std::string(kFormat) + "\"");
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != 1) {
        fail(ErrorCode::ParseError, "/version", "unsupported version (expected 1)");
    }
    for (const auto& [name, _] : doc.items()) {
        static const std::set<std::string> known = {"format", "version", "config", "models",
                                                    "axons",  "neurons", "outputs", "bias_axons"};
        if (!known.contains(name)) {
            fail(ErrorCode::ParseError, "/" + name, "unknown section", where(text, {}, name));
        }
    }

    NetworkBuilder b;
    if (doc.contains("config")) {
        const auto& c = doc["config"];
        if (!c.is_object()) {
            fail(ErrorCode::ParseError, "/config", "expected an object");
        }
        EngineConfig cfg;
        if (c.contains("max_fan_out")) {
            const auto f = as_int(c["max_fan_out"], "/config/max_fan_out", ErrorCode::InvalidArgument);
            if (f < 0 || f > std::numeric_limits<std::uint32_t>::max()) {
                fail(ErrorCode::InvalidArgument, "/config/max_fan_out", "out of range");
            }
            cfg.max_fan_out = static_cast<std::uint32_t>(f);
        }
        if (c.contains("saturating")) {
            if (!c["saturating"].is_boolean()) {
                fail(ErrorCode::ParseError, "/config/saturating", "expected a boolean");
            }
            cfg.saturating = c["saturating"].get<bool>();
        }
        b.config(cfg);
    }

    auto section = [&](const char* name, bool array) -> const Json* {
        if (!doc.contains(name)) {
            return nullptr;
        }
        const auto& s = doc[name];
        if (array ? !s.is_array() : !s.is_object()) {
            fail(ErrorCode::ParseError, std::string("/") + name, array ? "expected a list" : "expected an object");
        }
        return &s;
    };

    std::set<std::string> model_names, neuron_keys;
    if (const auto* models = section("models", false)) {
        for (const auto& [name, m] : models->items()) {
            const auto path = "/models/" + name;
            // Located lazily: each lookup scans the text.
            const auto loc = [&] { return where(text, "models", name); };
            if (!m.is_object() || !m.contains("kind") || !m["kind"].is_string() || !m.contains("theta")) {
                fail(ErrorCode::ParseError, path, "model needs \"kind\" and \"theta\"", loc());
            }
            const auto kind = m["kind"].get<std::string>();
            const auto theta = as_int(m["theta"], path + "/theta", ErrorCode::InvalidArgument);
            const auto nu = m.contains("nu") ? as_int(m["nu"], path + "/nu", ErrorCode::InvalidArgument) : -17;
            try {
                if (kind == "LIF") {
                    const auto lambda =
                        m.contains("lambda") ? as_int(m["lambda"], path + "/lambda", ErrorCode::InvalidArgument) : 0;
                    b.add_model(name, NeuronModel::lif(theta, nu, lambda));
                } else if (kind == "ANN") {
                    b.add_model(name, NeuronModel::ann(theta, nu));
                } else {
                    fail(ErrorCode::ParseError, path + "/kind", "expected \"LIF\" or \"ANN\"", loc());
                }
            } catch (const Error& e) {
                if (e.code() == ErrorCode::InvalidArgument) {
                    fail(e.code(), path, e.detail(), loc());
                }
                throw;
            }
            model_names.insert(name);
        }
    }
    if (const auto* neurons = section("neurons", false)) {
        for (const auto& [key, n] : neurons->items()) {
            neuron_keys.insert(key);
        }
    }

    auto check_targets = [&](const std::vector<SynapseDef>& syn, const std::string& path, std::string_view sec,
                             const std::string& key) {
        for (std::size_t i = 0; i < syn.size(); ++i) {
            if (!neuron_keys.contains(syn[i].post)) {
                fail(ErrorCode::DanglingTarget, path + "/" + std::to_string(i),
                     "target '" + syn[i].post + "' is not a neuron", where(text, sec, key));
            }
            if (!fits_int16(syn[i].weight)) {
                fail(ErrorCode::WeightOverflow, path + "/" + std::to_string(i),
                     "weight " + std::to_string(syn[i].weight) + " does not fit 16 bits", where(text, sec, key));
            }
        }
    };

    if (const auto* axons = section("axons", false)) {
        for (const auto& [key, list] : axons->items()) {
            const auto path = "/axons/" + key;
            auto syn = parse_synapses(list, path);
            check_targets(syn, path, "axons", key);
            b.add_axon(key, std::move(syn));
        }
    }
    if (const auto* neurons = section("neurons", false)) {
        for (const auto& [key, n] : neurons->items()) {
            const auto path = "/neurons/" + key;
            const auto loc = [&] { return where(text, "neurons", key); };
            if (!n.is_object() || !n.contains("model") || !n["model"].is_string()) {
                fail(ErrorCode::ParseError, path, "neuron needs a \"model\" name", loc());
            }
            const auto model = n["model"].get<std::string>();
            if (!model_names.contains(model)) {
                fail(ErrorCode::UnknownModel, path + "/model", "no model '" + model + "'", loc());
            }
            std::vector<SynapseDef> syn;
            if (n.contains("synapses")) {
                syn = parse_synapses(n["synapses"], path + "/synapses");
            }
            check_targets(syn, path + "/synapses", "neurons", key);
            b.add_neuron(key, model, std::move(syn));
        }
    }
    if (const auto* outputs = section("outputs", true)) {
        for (std::size_t i = 0; i < outputs->size(); ++i) {
            const auto& o = (*outputs)[i];
            if (!o.is_string()) {
                fail(ErrorCode::ParseError, "/outputs/" + std::to_string(i), "expected a neuron key");
            }
            if (!neuron_keys.contains(o.get<std::string>())) {
                fail(ErrorCode::UnknownOutputKey, "/outputs/" + std::to_string(i),
                     "no neuron '" + o.get<std::string>() + "'", where(text, "outputs", o.get<std::string>()));
            }
            b.add_output(o.get<std::string>());
        }
    }
    if (const auto* bias = section("bias_axons", true)) {
        for (std::size_t i = 0; i < bias->size(); ++i) {
            const auto& o = (*bias)[i];
            if (!o.is_string()) {
                fail(ErrorCode::ParseError, "/bias_axons/" + std::to_string(i), "expected an axon key");
            }
            b.add_bias_axon(o.get<std::string>());
        }
    }
    return b.build();
}

std::string to_netlist_json(const Network& net)
{
    // One entry per line keeps large netlists diffable.
    std::string out = "{\n \"format\": \"" + std::string(kFormat) + "\",\n \"version\": 1,\n";
    out += " \"config\": " +
           Json{{"max_fan_out", net.config().max_fan_out}, {"saturating", net.config().saturating}}.dump() + ",\n";

    auto block = [&](const char* name, const std::vector<std::pair<std::string, Json>>& items, bool last) {
        out += " \"" + std::string(name) + "\": {";
        for (std::size_t i = 0; i < items.size(); ++i) {
            out += (i == 0 ? "\n  " : ",\n  ") + Json(items[i].first).dump() + ": " + items[i].second.dump();
        }
        out += items.empty() ? "}" : "\n }";
        out += last ? "\n" : ",\n";
    };
    auto synapses = [&](std::span<const Synapse> syn) {
        Json list = Json::array();
        for (const auto& s : syn) {
            list.push_back(Json::array({net.neuron_keys()[s.post], s.weight}));
        }
        return list;
    };

    std::vector<std::pair<std::string, Json>> items;
    for (const auto& m : net.models()) {
        Json jm;
        jm["kind"] = m.model.kind == NeuronKind::LIF ? "LIF" : "ANN";
        jm["theta"] = m.model.theta;
        jm["nu"] = m.model.nu;
        if (m.model.kind == NeuronKind::LIF) {
            jm["lambda"] = m.model.lambda;
        }
        items.emplace_back(m.name, std::move(jm));
    }
    block("models", items, false);

    items.clear();
    for (std::uint32_t a = 0; a < net.num_axons(); ++a) {
        items.emplace_back(net.axon_keys()[a], synapses(net.axon_synapses(a)));
    }
    block("axons", items, false);

    items.clear();
    for (std::uint32_t j = 0; j < net.num_neurons(); ++j) {
        items.emplace_back(net.neuron_keys()[j], Json{{"model", net.models()[net.neuron_models()[j]].name},
                                                      {"synapses", synapses(net.neuron_synapses(j))}});
    }
    block("neurons", items, false);

    Json outputs = Json::array();
    for (auto o : net.outputs()) {
        outputs.push_back(net.neuron_keys()[o]);
    }
    out += " \"outputs\": " + outputs.dump();
    if (!net.bias_axons().empty()) {
        Json bias = Json::array();
        for (auto a : net.bias_axons()) {
            bias.push_back(net.axon_keys()[a]);
        }
        out += ",\n \"bias_axons\": " + bias.dump();
    }
    out += "\n}\n";
    return out;
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
    }
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot create '" + path + "'");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    }
}

Network load_netlist(const std::string& path)
{
    const auto text = read_text_file(path);
    try {
        return parse_netlist(text);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.detail());
    }
}

void save_netlist(const std::string& path, const Network& net)
{
    write_text_file(path, to_netlist_json(net));
}

} // namespace spikecore::io
