#include "spikecore/dense_oracle.hpp"

#include <algorithm>

#include "spikecore/error.hpp"

namespace spikecore {

namespace {

using Row = std::vector<DenseWeights::Entry>;

std::int16_t row_lookup(const Row& row, std::uint32_t pre)
{
    auto it = std::lower_bound(row.begin(), row.end(), pre,
                               [](const DenseWeights::Entry& e, std::uint32_t p) { return e.pre < p; });
    return it != row.end() && it->pre == pre ? it->weight : 0;
}

void row_store(Row& row, std::uint32_t pre, std::int16_t w)
{
    auto it = std::lower_bound(row.begin(), row.end(), pre,
                               [](const DenseWeights::Entry& e, std::uint32_t p) { return e.pre < p; });
    if (it != row.end() && it->pre == pre) {
        it->weight = w;
    } else {
        row.insert(it, {pre, w});
    }
}

} // namespace

DenseWeights DenseWeights::from_network(const Network& net)
{
    DenseWeights w;
    w.num_axons = net.num_axons();
    w.num_neurons = net.num_neurons();
    w.axon_rows.resize(w.num_neurons);
    w.neuron_rows.resize(w.num_neurons);
    // Iterating sources in ascending order keeps each row sorted by column.
    for (std::uint32_t a = 0; a < w.num_axons; ++a) {
        for (const auto& s : net.axon_synapses(a)) {
            w.axon_rows[s.post].push_back({a, s.weight});
        }
    }
    for (std::uint32_t j = 0; j < w.num_neurons; ++j) {
        for (const auto& s : net.neuron_synapses(j)) {
            w.neuron_rows[s.post].push_back({j, s.weight});
        }
    }
    return w;
}

std::int16_t DenseWeights::axon_weight(std::uint32_t post, std::uint32_t axon) const
{
    return row_lookup(axon_rows.at(post), axon);
}

std::int16_t DenseWeights::neuron_weight(std::uint32_t post, std::uint32_t pre) const
{
    return row_lookup(neuron_rows.at(post), pre);
}

void DenseWeights::set_axon_weight(std::uint32_t post, std::uint32_t axon, std::int16_t w)
{
    row_store(axon_rows.at(post), axon, w);
}

void DenseWeights::set_neuron_weight(std::uint32_t post, std::uint32_t pre, std::int16_t w)
{
    row_store(neuron_rows.at(post), pre, w);
}

DenseOracle::DenseOracle(const Network& net)
    : weights_(DenseWeights::from_network(net))
    , is_output_(net.num_neurons(), 0)
    , saturating_(net.config().saturating)
{
    models_.reserve(net.num_neurons());
    for (std::uint32_t i = 0; i < net.num_neurons(); ++i) {
        models_.push_back(net.model_of(i));
    }
    for (auto o : net.outputs()) {
        is_output_[o] = 1;
    }
}

std::vector<std::uint32_t> DenseOracle::step(SimState& state, std::span<const std::uint32_t> active_axons) const
{
    const std::size_t n = weights_.num_neurons;
    if (state.membrane.size() != n || state.fired_neurons.size() != n ||
        state.fired_axons.size() != weights_.num_axons) {
        throw Error(ErrorCode::DimensionMismatch, "state does not match network dimensions");
    }
    for (auto a : active_axons) {
        if (a >= weights_.num_axons) {
            throw Error(ErrorCode::DimensionMismatch, "axon index " + std::to_string(a) + " out of range");
        }
    }

    // Noise is drawn for every neuron, ascending, even when disabled.
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t noise = noise_sample(models_[i].nu, state.rng);
        state.membrane[i] = membrane_add(state.membrane[i], noise, saturating_);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto r = threshold_and_reset(state.membrane[i], models_[i].theta);
        state.fired_neurons[i] = r.spiked ? 1 : 0;
        state.membrane[i] = models_[i].kind == NeuronKind::LIF ? leak(r.v, models_[i].lambda) : 0;
    }

    std::fill(state.fired_axons.begin(), state.fired_axons.end(), 0);
    for (auto a : active_axons) {
        state.fired_axons[a] = 1;
    }

    // Row-wise matrix-vector products, axon columns before neuron columns.
    for (std::size_t i = 0; i < n; ++i) {
        std::int32_t v = state.membrane[i];
        for (const auto& e : weights_.axon_rows[i]) {
            if (state.fired_axons[e.pre]) {
                v = membrane_add(v, e.weight, saturating_);
            }
        }
        for (const auto& e : weights_.neuron_rows[i]) {
            if (state.fired_neurons[e.pre]) {
                v = membrane_add(v, e.weight, saturating_);
            }
        }
        state.membrane[i] = v;
    }

    ++state.t;

    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (state.fired_neurons[i] && is_output_[i]) {
            out.push_back(i);
        }
    }
    return out;
}

} // namespace spikecore
