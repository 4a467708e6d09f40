#include "scaling.hpp"

#include <random>

#include <fmt/format.h>

#include "spikecore/error.hpp"

namespace spikecore::cli {

Network mlp_member(std::uint32_t hidden, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> w(-1024, 1024);
    NetworkBuilder b;
    b.add_model("relu", NeuronModel::ann(0, kNoiseDisabledNu));
    for (std::uint32_t j = 0; j < hidden; ++j) {
        b.add_neuron("h_" + std::to_string(j), "relu");
    }
    for (int k = 0; k < 10; ++k) {
        b.add_neuron("out_" + std::to_string(k), "relu");
        b.add_output("out_" + std::to_string(k));
    }
    for (int i = 0; i < 784; ++i) {
        const std::string key = "in_" + std::to_string(i);
        b.add_axon(key);
        for (std::uint32_t j = 0; j < hidden; ++j) {
            b.connect(key, "h_" + std::to_string(j), w(rng));
        }
    }
    for (std::uint32_t j = 0; j < hidden; ++j) {
        for (int k = 0; k < 10; ++k) {
            b.connect("h_" + std::to_string(j), "out_" + std::to_string(k), w(rng));
        }
    }
    return b.build();
}

io::Schedule frame_schedule(std::size_t inputs, std::size_t inferences, double density, std::uint64_t seed)
{
    if (!(density >= 0.0 && density <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "input density must be in [0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution on(density);
    io::Schedule s;
    for (std::size_t n = 0; n < inferences; ++n) {
        auto& frame = s.steps.emplace_back();
        for (std::size_t i = 0; i < inputs; ++i) {
            if (on(rng)) {
                frame.push_back("in_" + std::to_string(i));
            }
        }
        s.steps.emplace_back();
        s.steps.emplace_back();
        s.blocks.push_back(3);
    }
    return s;
}

namespace {

std::string copy_key(std::size_t k, const std::string& key) { return "r" + std::to_string(k) + "/" + key; }

} // namespace

Network replicate(const Network& base, std::size_t copies)
{
    NetworkBuilder b;
    b.config(base.config());
    for (const auto& m : base.models()) {
        b.add_model(m.name, m.model);
    }
    const auto& nk = base.neuron_keys();
    for (std::size_t k = 0; k < copies; ++k) {
        for (std::uint32_t a = 0; a < base.num_axons(); ++a) {
            std::vector<SynapseDef> syn;
            for (const auto& s : base.axon_synapses(a)) {
                syn.push_back({copy_key(k, nk[s.post]), s.weight});
            }
            b.add_axon(copy_key(k, base.axon_keys()[a]), std::move(syn));
        }
        for (std::uint32_t n = 0; n < base.num_neurons(); ++n) {
            std::vector<SynapseDef> syn;
            for (const auto& s : base.neuron_synapses(n)) {
                syn.push_back({copy_key(k, nk[s.post]), s.weight});
            }
            b.add_neuron(copy_key(k, nk[n]), base.models()[base.neuron_models()[n]].name, std::move(syn));
        }
        for (auto o : base.outputs()) {
            b.add_output(copy_key(k, nk[o]));
        }
        for (auto a : base.bias_axons()) {
            b.add_bias_axon(copy_key(k, base.axon_keys()[a]));
        }
    }
    return b.build();
}

io::Schedule replicate_schedule(const io::Schedule& s, std::size_t copies)
{
    io::Schedule out;
    out.blocks = s.blocks;
    for (const auto& step : s.steps) {
        auto& keys = out.steps.emplace_back();
        for (std::size_t k = 0; k < copies; ++k) {
            for (const auto& key : step) {
                keys.push_back(copy_key(k, key));
            }
        }
    }
    return out;
}

ScalingReport run_scaling(const std::vector<FamilyMember>& family, std::uint64_t seed, const CostConfig& cost)
{
    if (family.size() < 3) {
        throw Error(ErrorCode::DegenerateInput,
                    "scaling needs at least 3 family members, got " + std::to_string(family.size()));
    }
    ScalingReport r;
    std::vector<std::pair<double, double>> acc, cyc;
    for (const auto& m : family) {
        RunOptions o;
        o.backend = Backend::Engine;
        o.seed = seed;
        o.cost = cost;
        const auto rec = run_network(m.net, m.schedule, o);
        ScalingPoint p;
        p.scale = m.scale;
        p.neurons = m.net.num_neurons();
        p.axons = m.net.num_axons();
        p.synapses = m.net.num_synapses();
        p.totals = rec.cost->totals;
        p.energy = rec.cost->energy;
        p.latency = rec.cost->latency;
        acc.emplace_back(static_cast<double>(p.neurons), static_cast<double>(p.totals.hbm_accesses()));
        cyc.emplace_back(static_cast<double>(p.neurons), static_cast<double>(p.totals.total_cycles));
        r.points.push_back(p);
    }
    try {
        r.accesses = scaling_regression(acc);
        r.cycles = scaling_regression(cyc);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateInput) {
            throw;
        }
        r.accesses.reset(); // every member has the same size
        r.cycles.reset();
    }
    return r;
}

std::string format_scaling(const ScalingReport& r)
{
    std::string out = fmt::format("spikecore-scaling 1\npoints {}\n", r.points.size());
    const auto fit_line = [&](const char* name, const std::optional<LinearFit>& f) {
        if (!f) {
            out += fmt::format("fit {} degenerate reason=constant_neurons\n", name);
        } else if (!f->r_squared) {
            out += fmt::format("fit {} slope={} intercept={} r2=undefined degenerate\n", name, f->slope, f->intercept);
        } else {
            out += fmt::format("fit {} slope={} intercept={} r2={}\n", name, f->slope, f->intercept, *f->r_squared);
        }
    };
    fit_line("accesses", r.accesses);
    fit_line("cycles", r.cycles);
    out += "table\nscale,neurons,axons,synapses,pointer_reads,synapse_rows,scan_cycles,accesses,cycles,energy,latency\n";
    for (const auto& p : r.points) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", p.scale, p.neurons, p.axons, p.synapses,
                           p.totals.pointer_row_reads, p.totals.synapse_row_reads, p.totals.neuron_scan_cycles,
                           p.totals.hbm_accesses(), p.totals.total_cycles, p.energy, p.latency);
    }
    out += "end\n";
    return out;
}

} // namespace spikecore::cli
