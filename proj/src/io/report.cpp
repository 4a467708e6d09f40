#include "spikecore/io/report.hpp"

#include <fmt/format.h>

namespace spikecore::io {

std::string encode_key(std::string_view key)
{
    std::string out;
    for (unsigned char c : key) {
        const bool plain = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
                           c == '.' || c == ':' || c == '/' || c == '+' || c == '-';
        if (plain) {
            out.push_back(static_cast<char>(c));
        } else {
            out += fmt::format("%{:02X}", c);
        }
    }
    return out;
}

namespace {

std::string join_keys(const std::vector<std::string>& keys)
{
    std::string out;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i > 0) {
            out.push_back(',');
        }
        out += encode_key(keys[i]);
    }
    return out;
}

} // namespace

std::string format_report(const RunRecord& run)
{
    const bool engine = run.cost.has_value();
    fmt::memory_buffer out;
    auto line = [&]<typename... A>(fmt::format_string<A...> f, A&&... args) {
        fmt::format_to(std::back_inserter(out), f, std::forward<A>(args)...);
        out.push_back('\n');
    };

    line("spikecore-report 1");
    line("backend {}", to_string(run.backend));
    line("seed {}", run.seed);
    line("network axons={} neurons={} outputs={}", run.axons, run.neurons, join_keys(run.outputs));
    if (engine) {
        line("cost_config energy_per_access={} cycles_per_row={} clock_period={}", run.cost_config.energy_per_access,
             run.cost_config.cycles_per_row, run.cost_config.clock_period);
    }
    std::uint64_t output_spikes = 0;
    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        const auto& s = run.steps[t];
        output_spikes += s.spikes.size();
        if (s.counters) {
            const auto& c = *s.counters;
            line("step {} spikes={} pointer_reads={} synapse_rows={} scan_cycles={} cycles={}", t, join_keys(s.spikes),
                 c.pointer_row_reads, c.synapse_row_reads, c.neuron_scan_cycles, c.total_cycles);
        } else {
            line("step {} spikes={}", t, join_keys(s.spikes));
        }
    }
    if (engine) {
        const auto& c = run.cost->totals;
        line("total steps={} output_spikes={} pointer_reads={} synapse_rows={} scan_cycles={} accesses={} cycles={} "
             "energy={} latency={}",
             run.steps.size(), output_spikes, c.pointer_row_reads, c.synapse_row_reads, c.neuron_scan_cycles,
             c.hbm_accesses(), c.total_cycles, run.cost->energy, run.cost->latency);
    } else {
        line("total steps={} output_spikes={}", run.steps.size(), output_spikes);
    }

    const auto stats = inference_stats(run);
    std::vector<double> energy, latency;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        if (s.counters) {
            line("inference {} first_step={} steps={} output_spikes={} accesses={} cycles={} energy={} latency={}", i,
                 s.first_step, s.steps, s.output_spikes, s.counters->hbm_accesses(), s.counters->total_cycles,
                 *s.energy, *s.latency);
            energy.push_back(*s.energy);
            latency.push_back(*s.latency);
        } else {
            line("inference {} first_step={} steps={} output_spikes={}", i, s.first_step, s.steps, s.output_spikes);
        }
    }
    if (engine) {
        const auto e = mean_sd(energy), l = mean_sd(latency);
        line("summary inferences={} energy_mean={} energy_sd={} latency_mean={} latency_sd={}", stats.size(), e.mean,
             e.sd, l.mean, l.sd);
    } else {
        line("summary inferences={}", stats.size());
    }

    fmt::format_to(std::back_inserter(out), "membranes");
    for (std::size_t i = 0; i < run.final_membranes.size(); ++i) {
        fmt::format_to(std::back_inserter(out), " {}={}", encode_key(run.neuron_keys[i]), run.final_membranes[i]);
    }
    out.push_back('\n');
    line("end");
    return fmt::to_string(out);
}

} // namespace spikecore::io
