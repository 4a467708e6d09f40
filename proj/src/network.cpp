#include "spikecore/network.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "spikecore/error.hpp"

namespace spikecore {

bool fits_int16(std::int64_t w) noexcept
{
    return w >= std::numeric_limits<std::int16_t>::min() && w <= std::numeric_limits<std::int16_t>::max();
}

NetworkBuilder& NetworkBuilder::add_model(std::string name, NeuronModel model)
{
    if (model.kind == NeuronKind::ANN) {
        model.lambda = 0;
    }
    models_.push_back({std::move(name), model});
    return *this;
}

NetworkBuilder& NetworkBuilder::add_axon(std::string key, std::vector<SynapseDef> synapses)
{
    if (!axon_pos_.emplace(key, axons_.size()).second) {
        duplicates_.push_back(key);
    }
    axons_.push_back({std::move(key), {}, std::move(synapses)});
    return *this;
}

NetworkBuilder& NetworkBuilder::add_neuron(std::string key, std::string model, std::vector<SynapseDef> synapses)
{
    if (!neuron_pos_.emplace(key, neurons_.size()).second) {
        duplicates_.push_back(key);
    }
    neurons_.push_back({std::move(key), std::move(model), std::move(synapses)});
    return *this;
}

NetworkBuilder& NetworkBuilder::connect(std::string_view pre, std::string post, std::int64_t weight)
{
    const std::string k(pre);
    if (auto it = neuron_pos_.find(k); it != neuron_pos_.end()) {
        neurons_[it->second].synapses.push_back({std::move(post), weight});
    } else if (auto ita = axon_pos_.find(k); ita != axon_pos_.end()) {
        axons_[ita->second].synapses.push_back({std::move(post), weight});
    } else {
        throw Error(ErrorCode::UnknownNeuronKey, "connect from undefined source '" + k + "'");
    }
    return *this;
}

NetworkBuilder& NetworkBuilder::add_output(std::string key)
{
    outputs_.push_back(std::move(key));
    return *this;
}

NetworkBuilder& NetworkBuilder::add_bias_axon(std::string key)
{
    bias_axons_.push_back(std::move(key));
    return *this;
}

NetworkBuilder& NetworkBuilder::config(EngineConfig cfg)
{
    config_ = cfg;
    return *this;
}

Network NetworkBuilder::build() const
{
    if (!duplicates_.empty()) {
        throw Error(ErrorCode::DuplicateKey, "key '" + duplicates_.front() + "' defined twice");
    }
    for (const auto& a : axons_) {
        if (neuron_pos_.contains(a.key)) {
            throw Error(ErrorCode::DuplicateKey, "key '" + a.key + "' names both an axon and a neuron");
        }
    }

    std::unordered_map<std::string, std::uint32_t> model_lookup;
    for (std::uint32_t m = 0; m < models_.size(); ++m) {
        if (!model_lookup.emplace(models_[m].name, m).second) {
            throw Error(ErrorCode::DuplicateKey, "model '" + models_[m].name + "' defined twice");
        }
    }

    // Neuron order: grouped by model in model insertion order, stable within.
    std::vector<std::uint32_t> model_of(neurons_.size());
    for (std::size_t i = 0; i < neurons_.size(); ++i) {
        auto it = model_lookup.find(neurons_[i].model);
        if (it == model_lookup.end()) {
            throw Error(ErrorCode::UnknownModel,
                        "neuron '" + neurons_[i].key + "' uses undefined model '" + neurons_[i].model + "'");
        }
        model_of[i] = it->second;
    }
    std::vector<std::uint32_t> order(neurons_.size());
    std::iota(order.begin(), order.end(), 0U);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t x, std::uint32_t y) { return model_of[x] < model_of[y]; });

    NetworkAssembler::Parts parts;
    parts.models = models_;
    parts.config = config_;
    std::unordered_map<std::string, std::uint32_t> neuron_index;
    neuron_index.reserve(neurons_.size());
    for (std::uint32_t idx = 0; idx < order.size(); ++idx) {
        const auto& n = neurons_[order[idx]];
        neuron_index.emplace(n.key, idx);
        parts.neuron_keys.push_back(n.key);
        parts.neuron_models.push_back(model_of[order[idx]]);
    }

    auto resolve = [&](const Source& src, std::string_view kind) {
        if (src.synapses.size() > config_.max_fan_out) {
            throw Error(ErrorCode::FanOutExceeded, std::string(kind) + " '" + src.key + "' has fan-out " +
                                                       std::to_string(src.synapses.size()) + " > " +
                                                       std::to_string(config_.max_fan_out));
        }
        std::vector<Synapse> out;
        out.reserve(src.synapses.size());
        for (const auto& s : src.synapses) {
            auto it = neuron_index.find(s.post);
            if (it == neuron_index.end()) {
                throw Error(ErrorCode::DanglingTarget,
                            std::string(kind) + " '" + src.key + "' targets unknown neuron '" + s.post + "'");
            }
            if (!fits_int16(s.weight)) {
                throw Error(ErrorCode::WeightOverflow, "synapse " + src.key + " -> " + s.post + " weight " +
                                                           std::to_string(s.weight) + " does not fit 16 bits");
            }
            out.push_back({it->second, static_cast<std::int16_t>(s.weight)});
        }
        std::sort(out.begin(), out.end(), [](const Synapse& x, const Synapse& y) { return x.post < y.post; });
        for (std::size_t i = 1; i < out.size(); ++i) {
            if (out[i].post == out[i - 1].post) {
                throw Error(ErrorCode::DuplicateKey, std::string(kind) + " '" + src.key +
                                                         "' has two synapses to '" + parts.neuron_keys[out[i].post] +
                                                         "'");
            }
        }
        return out;
    };

    for (const auto& a : axons_) {
        parts.axon_keys.push_back(a.key);
        parts.axon_synapses.push_back(resolve(a, "axon"));
    }
    parts.neuron_synapses.resize(neurons_.size());
    for (std::uint32_t idx = 0; idx < order.size(); ++idx) {
        parts.neuron_synapses[idx] = resolve(neurons_[order[idx]], "neuron");
    }

    for (const auto& key : outputs_) {
        auto it = neuron_index.find(key);
        if (it == neuron_index.end()) {
            throw Error(ErrorCode::UnknownOutputKey, "output '" + key + "' is not a neuron");
        }
        parts.outputs.push_back(it->second);
    }
    for (const auto& key : bias_axons_) {
        auto it = axon_pos_.find(key);
        if (it == axon_pos_.end()) {
            throw Error(ErrorCode::UnknownAxonKey, "bias axon '" + key + "' is not an axon");
        }
        parts.bias_axons.push_back(static_cast<std::uint32_t>(it->second));
    }
    return NetworkAssembler::assemble(std::move(parts));
}

Network NetworkAssembler::assemble(Parts parts)
{
    const auto n = parts.neuron_keys.size();
    if (parts.neuron_models.size() != n || parts.neuron_synapses.size() != n ||
        parts.axon_synapses.size() != parts.axon_keys.size()) {
        throw Error(ErrorCode::DimensionMismatch, "network parts have inconsistent sizes");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (parts.neuron_models[i] >= parts.models.size()) {
            throw Error(ErrorCode::UnknownModel, "neuron '" + parts.neuron_keys[i] + "' has model index out of range");
        }
        if (i > 0 && parts.neuron_models[i] < parts.neuron_models[i - 1]) {
            throw Error(ErrorCode::InvalidArgument, "neuron indices are not grouped by model");
        }
    }
    auto check_list = [&](std::vector<Synapse>& list, const std::string& key) {
        if (list.size() > parts.config.max_fan_out) {
            throw Error(ErrorCode::FanOutExceeded, "'" + key + "' fan-out " + std::to_string(list.size()));
        }
        std::sort(list.begin(), list.end(), [](const Synapse& x, const Synapse& y) { return x.post < y.post; });
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i].post >= n) {
                throw Error(ErrorCode::DanglingTarget, "'" + key + "' targets neuron index " +
                                                           std::to_string(list[i].post));
            }
            if (i > 0 && list[i].post == list[i - 1].post) {
                throw Error(ErrorCode::DuplicateKey, "'" + key + "' has duplicate synapses");
            }
        }
    };
    for (std::size_t a = 0; a < parts.axon_keys.size(); ++a) {
        check_list(parts.axon_synapses[a], parts.axon_keys[a]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        check_list(parts.neuron_synapses[i], parts.neuron_keys[i]);
    }

    Network net;
    net.axon_keys_ = std::move(parts.axon_keys);
    net.neuron_keys_ = std::move(parts.neuron_keys);
    net.models_ = std::move(parts.models);
    for (auto& m : net.models_) {
        if (m.model.kind == NeuronKind::ANN) {
            m.model.lambda = 0;
        }
    }
    net.neuron_model_ = std::move(parts.neuron_models);
    net.axon_syn_ = std::move(parts.axon_synapses);
    net.neuron_syn_ = std::move(parts.neuron_synapses);
    net.config_ = parts.config;
    net.index_keys();

    net.output_mask_.assign(n, 0);
    for (auto o : parts.outputs) {
        if (o >= n) {
            throw Error(ErrorCode::UnknownOutputKey, "output index " + std::to_string(o) + " out of range");
        }
        if (net.output_mask_[o]) {
            throw Error(ErrorCode::DuplicateKey, "output '" + net.neuron_keys_[o] + "' listed twice");
        }
        net.output_mask_[o] = 1;
    }
    std::sort(parts.outputs.begin(), parts.outputs.end());
    net.outputs_ = std::move(parts.outputs);

    std::sort(parts.bias_axons.begin(), parts.bias_axons.end());
    parts.bias_axons.erase(std::unique(parts.bias_axons.begin(), parts.bias_axons.end()), parts.bias_axons.end());
    for (auto b : parts.bias_axons) {
        if (b >= net.axon_keys_.size()) {
            throw Error(ErrorCode::UnknownAxonKey, "bias axon index out of range");
        }
    }
    net.bias_axons_ = std::move(parts.bias_axons);
    return net;
}

void Network::index_keys()
{
    axon_lookup_.clear();
    neuron_lookup_.clear();
    axon_lookup_.reserve(axon_keys_.size());
    neuron_lookup_.reserve(neuron_keys_.size());
    for (std::uint32_t i = 0; i < axon_keys_.size(); ++i) {
        if (!axon_lookup_.emplace(axon_keys_[i], i).second) {
            throw Error(ErrorCode::DuplicateKey, "axon key '" + axon_keys_[i] + "' repeated");
        }
    }
    for (std::uint32_t i = 0; i < neuron_keys_.size(); ++i) {
        if (!neuron_lookup_.emplace(neuron_keys_[i], i).second || axon_lookup_.contains(neuron_keys_[i])) {
            throw Error(ErrorCode::DuplicateKey, "neuron key '" + neuron_keys_[i] + "' repeated");
        }
    }
}

std::size_t Network::num_synapses() const noexcept
{
    std::size_t total = 0;
    for (const auto& s : axon_syn_) {
        total += s.size();
    }
    for (const auto& s : neuron_syn_) {
        total += s.size();
    }
    return total;
}

std::optional<std::uint32_t> Network::find_axon(std::string_view key) const
{
    auto it = axon_lookup_.find(std::string(key));
    if (it == axon_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::uint32_t> Network::find_neuron(std::string_view key) const
{
    auto it = neuron_lookup_.find(std::string(key));
    if (it == neuron_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::uint32_t Network::axon_index(std::string_view key) const
{
    if (auto i = find_axon(key)) {
        return *i;
    }
    throw Error(ErrorCode::UnknownAxonKey, "no axon '" + std::string(key) + "'");
}

std::uint32_t Network::neuron_index(std::string_view key) const
{
    if (auto i = find_neuron(key)) {
        return *i;
    }
    throw Error(ErrorCode::UnknownNeuronKey, "no neuron '" + std::string(key) + "'");
}

bool Network::is_output(std::uint32_t neuron) const
{
    return neuron < output_mask_.size() && output_mask_[neuron] != 0;
}

Network::Source Network::source_index(std::string_view pre_key) const
{
    if (auto n = find_neuron(pre_key)) {
        return {false, *n};
    }
    if (auto a = find_axon(pre_key)) {
        return {true, *a};
    }
    throw Error(ErrorCode::NoSuchSynapse, "no axon or neuron '" + std::string(pre_key) + "'");
}

Synapse* Network::find_synapse(std::string_view pre_key, std::string_view post_key)
{
    const auto src = source_index(pre_key);
    const auto post = find_neuron(post_key);
    if (!post) {
        throw Error(ErrorCode::NoSuchSynapse, "no neuron '" + std::string(post_key) + "'");
    }
    auto& list = src.is_axon ? axon_syn_[src.index] : neuron_syn_[src.index];
    auto it = std::lower_bound(list.begin(), list.end(), *post,
                               [](const Synapse& s, std::uint32_t p) { return s.post < p; });
    if (it == list.end() || it->post != *post) {
        throw Error(ErrorCode::NoSuchSynapse,
                    "no synapse '" + std::string(pre_key) + "' -> '" + std::string(post_key) + "'");
    }
    return &*it;
}

std::int16_t Network::read_synapse(std::string_view pre_key, std::string_view post_key) const
{
    return const_cast<Network*>(this)->find_synapse(pre_key, post_key)->weight;
}

void Network::write_synapse(std::string_view pre_key, std::string_view post_key, std::int64_t weight)
{
    Synapse* s = find_synapse(pre_key, post_key);
    if (!fits_int16(weight)) {
        throw Error(ErrorCode::WeightOverflow, "weight " + std::to_string(weight) + " does not fit 16 bits");
    }
    s->weight = static_cast<std::int16_t>(weight);
}

bool Network::operator==(const Network& o) const
{
    return axon_keys_ == o.axon_keys_ && neuron_keys_ == o.neuron_keys_ && models_ == o.models_ &&
           neuron_model_ == o.neuron_model_ && axon_syn_ == o.axon_syn_ && neuron_syn_ == o.neuron_syn_ &&
           outputs_ == o.outputs_ && bias_axons_ == o.bias_axons_ && config_ == o.config_;
}

} // namespace spikecore
