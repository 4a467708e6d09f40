#include "spikecore/runner.hpp"

#include <algorithm>
#include <cmath>

#include "spikecore/dense_oracle.hpp"
#include "spikecore/error.hpp"
#include "spikecore/hbm/compiler.hpp"

namespace spikecore {

namespace {

std::vector<std::uint32_t> active_axons(const std::vector<std::string>& keys, std::span<const std::uint32_t> bias,
                                        auto&& find_axon)
{
    std::vector<std::uint32_t> active(bias.begin(), bias.end());
    for (const auto& k : keys) {
        const auto a = find_axon(k);
        if (!a) {
            throw Error(ErrorCode::UnknownAxonKey, "no axon '" + k + "'");
        }
        active.push_back(*a);
    }
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    return active;
}

RunRecord run_oracle(const Network& net, const io::Schedule& schedule, const RunOptions& options)
{
    RunRecord rec;
    rec.backend = Backend::Oracle;
    rec.seed = options.seed;
    rec.cost_config = options.cost;
    rec.axons = net.num_axons();
    rec.neurons = net.num_neurons();
    for (auto o : net.outputs()) {
        rec.outputs.push_back(net.neuron_keys()[o]);
    }
    rec.blocks = schedule.blocks;
    rec.neuron_keys = net.neuron_keys();

    DenseOracle oracle(net);
    SimState s(net.num_neurons(), net.num_axons(), options.seed);
    for (std::size_t t = 0; t < schedule.steps.size(); ++t) {
        std::vector<std::uint32_t> active;
        try {
            active = active_axons(schedule.steps[t], net.bias_axons(), [&](const auto& k) { return net.find_axon(k); });
        } catch (const Error& e) {
            throw Error(e.code(), "step " + std::to_string(t) + ": " + e.detail());
        }
        auto& step = rec.steps.emplace_back();
        for (auto i : oracle.step(s, active)) {
            step.spikes.push_back(net.neuron_keys()[i]);
        }
    }
    rec.final_membranes = s.membrane;
    return rec;
}

RunRecord run_engine(const hbm::HbmImage& image, const io::Schedule& schedule, const RunOptions& options)
{
    options.cost.validate();
    const auto& st = image.symtab();
    RunRecord rec;
    rec.backend = Backend::Engine;
    rec.seed = options.seed;
    rec.cost_config = options.cost;
    rec.axons = image.num_axons();
    rec.neurons = image.num_neurons();
    rec.blocks = schedule.blocks;
    rec.neuron_keys = st.neuron_keys();

    EventEngine engine(image, options.cost.cycles_per_row);
    for (auto o : engine.outputs()) {
        rec.outputs.push_back(st.neuron_keys()[o]);
    }
    auto s = engine.make_state(options.seed);
    std::vector<StepCounters> per_step;
    for (std::size_t t = 0; t < schedule.steps.size(); ++t) {
        std::vector<std::uint32_t> active;
        try {
            active = active_axons(schedule.steps[t], st.bias_axons(), [&](const auto& k) { return st.find_axon(k); });
        } catch (const Error& e) {
            throw Error(e.code(), "step " + std::to_string(t) + ": " + e.detail());
        }
        auto& step = rec.steps.emplace_back();
        StepCounters c;
        for (auto i : engine.step(s, active, &c)) {
            step.spikes.push_back(st.neuron_keys()[i]);
        }
        step.counters = c;
        per_step.push_back(c);
    }
    rec.cost = make_cost_report(std::move(per_step), options.cost);
    rec.final_membranes = s.membrane;
    return rec;
}

} // namespace

RunRecord run_network(const Network& net, const io::Schedule& schedule, const RunOptions& options)
{
    if (options.backend == Backend::Oracle) {
        return run_oracle(net, schedule, options);
    }
    return run_engine(hbm::compile(net), schedule, options);
}

RunRecord run_image(const hbm::HbmImage& image, const io::Schedule& schedule, const RunOptions& options)
{
    if (options.backend == Backend::Oracle) {
        return run_oracle(hbm::decompile(image), schedule, options);
    }
    return run_engine(image, schedule, options);
}

std::vector<InferenceStats> inference_stats(const RunRecord& run)
{
    std::vector<InferenceStats> out;
    std::size_t t = 0;
    for (auto len : run.blocks) {
        InferenceStats s;
        s.first_step = t;
        s.steps = len;
        std::vector<StepCounters> counters;
        for (std::size_t k = 0; k < len && t < run.steps.size(); ++k, ++t) {
            s.output_spikes += run.steps[t].spikes.size();
            if (run.steps[t].counters) {
                counters.push_back(*run.steps[t].counters);
            }
        }
        if (run.cost) {
            const auto report = make_cost_report(std::move(counters), run.cost_config);
            s.counters = report.totals;
            s.energy = report.energy;
            s.latency = report.latency;
        }
        out.push_back(s);
    }
    return out;
}

MeanSd mean_sd(std::span<const double> values)
{
    MeanSd r;
    if (values.empty()) {
        return r;
    }
    for (auto v : values) {
        r.mean += v;
    }
    r.mean /= static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (auto v : values) {
            ss += (v - r.mean) * (v - r.mean);
        }
        r.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return r;
}

DiffResult diff_backends(const Network& net, const hbm::HbmImage& image, const io::Schedule& schedule,
                         std::uint64_t seed)
{
    const auto& st = image.symtab();
    if (st.axon_keys() != net.axon_keys() || st.neuron_keys() != net.neuron_keys()) {
        throw Error(ErrorCode::InvalidArgument, "image keys do not match the netlist");
    }
    DenseOracle oracle(net);
    EventEngine engine(image);
    SimState so(net.num_neurons(), net.num_axons(), seed);
    auto se = engine.make_state(seed);

    DiffResult result;
    for (std::size_t t = 0; t < schedule.steps.size(); ++t) {
        const auto active =
            active_axons(schedule.steps[t], net.bias_axons(), [&](const auto& k) { return net.find_axon(k); });
        const auto out_o = oracle.step(so, active);
        const auto out_e = engine.step(se, active);
        ++result.steps;
        for (std::size_t i = 0; i < net.num_neurons(); ++i) {
            std::string what;
            if (so.fired_neurons[i] != se.fired_neurons[i]) {
                what = "spike oracle=" + std::to_string(so.fired_neurons[i]) +
                       " engine=" + std::to_string(se.fired_neurons[i]);
            } else if (so.membrane[i] != se.membrane[i]) {
                what = "membrane oracle=" + std::to_string(so.membrane[i]) +
                       " engine=" + std::to_string(se.membrane[i]);
            }
            if (!what.empty()) {
                result.pass = false;
                result.first = Divergence{t, net.neuron_keys()[i], what};
                return result;
            }
        }
        if (out_o != out_e) {
            std::vector<std::uint32_t> sym;
            std::set_symmetric_difference(out_o.begin(), out_o.end(), out_e.begin(), out_e.end(),
                                          std::back_inserter(sym));
            result.pass = false;
            result.first = Divergence{t, net.neuron_keys()[sym.front()], "output designation"};
            return result;
        }
    }
    return result;
}

std::size_t membrane_argmax(std::span<const std::int32_t> membranes)
{
    if (membranes.empty()) {
        throw Error(ErrorCode::InvalidArgument, "argmax of an empty readout");
    }
    return static_cast<std::size_t>(std::max_element(membranes.begin(), membranes.end()) - membranes.begin());
}

std::size_t rate_argmax(std::span<const std::uint64_t> spike_counts)
{
    if (spike_counts.empty()) {
        throw Error(ErrorCode::InvalidArgument, "argmax of an empty readout");
    }
    return static_cast<std::size_t>(std::max_element(spike_counts.begin(), spike_counts.end()) -
                                    spike_counts.begin());
}

} // namespace spikecore
