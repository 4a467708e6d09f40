#include "spikecore/engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spikecore/error.hpp"
#include "spikecore/hbm/layout.hpp"

namespace spikecore {

using hbm::kLanes;
using hbm::kRowsPerSegment;
using hbm::kSlotsPerRow;

StepCounters& StepCounters::operator+=(const StepCounters& o) noexcept
{
    pointer_row_reads += o.pointer_row_reads;
    synapse_row_reads += o.synapse_row_reads;
    neuron_scan_cycles += o.neuron_scan_cycles;
    total_cycles += o.total_cycles;
    return *this;
}

void CostConfig::validate() const
{
    if (!(energy_per_access > 0.0) || cycles_per_row == 0 || !(clock_period > 0.0) ||
        !std::isfinite(energy_per_access) || !std::isfinite(clock_period)) {
        throw Error(ErrorCode::InvalidArgument, "cost constants must be positive");
    }
}

CostReport make_cost_report(std::vector<StepCounters> per_step, const CostConfig& config)
{
    config.validate();
    CostReport report;
    for (const auto& s : per_step) {
        report.totals += s;
    }
    report.per_step = std::move(per_step);
    report.energy = config.energy_per_access * static_cast<double>(report.totals.hbm_accesses());
    report.latency = config.clock_period * static_cast<double>(report.totals.total_cycles);
    return report;
}

EventEngine::EventEngine(const hbm::HbmImage& image, std::uint32_t cycles_per_row, const kernels::KernelSet& kernels)
    : image_(&image)
    , kernels_(&kernels)
    , cycles_per_row_(cycles_per_row)
{
    const auto n = image.num_neurons();
    theta_.resize(n);
    nu_.resize(n);
    lambda_.resize(n);
    is_ann_.resize(n);
    for (const auto& g : image.model_groups()) {
        if (std::uint64_t{g.first} + g.count > n) {
            throw Error(ErrorCode::IndexOutOfRange, "model range beyond neuron count");
        }
        for (std::uint32_t i = g.first; i < g.first + g.count; ++i) {
            theta_[i] = g.model.theta;
            nu_[i] = g.model.nu;
            lambda_[i] = g.model.lambda;
            is_ann_[i] = g.model.kind == NeuronKind::ANN ? 1 : 0;
        }
    }

    // Output designation lives in the synapse flags.
    is_output_.assign(n, 0);
    const auto& geo = image.geometry();
    for (std::uint64_t r = geo.synapses.begin; r < geo.synapses.end; ++r) {
        for (auto raw : image.row(r)) {
            const auto s = hbm::SynapseSlot::decode(raw);
            if (s.valid && s.output_flag) {
                if (s.post >= n) {
                    throw Error(ErrorCode::IndexOutOfRange, "output flag on neuron " + std::to_string(s.post));
                }
                is_output_[s.post] = 1;
            }
        }
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        if (is_output_[i]) {
            outputs_.push_back(i);
        }
    }
    noise_.resize(n);
}

SimState EventEngine::make_state(std::uint64_t seed) const
{
    return SimState(image_->num_neurons(), image_->num_axons(), seed);
}

std::vector<std::uint32_t> EventEngine::step(SimState& state, std::span<const std::uint32_t> active_axons,
                                             StepCounters* delta)
{
    const auto& image = *image_;
    const std::size_t n = image.num_neurons();
    const std::size_t n_axons = image.num_axons();
    const bool saturating = image.config().saturating;
    if (state.membrane.size() != n || state.fired_neurons.size() != n || state.fired_axons.size() != n_axons) {
        throw Error(ErrorCode::DimensionMismatch, "state does not match image dimensions");
    }
    for (auto a : active_axons) {
        if (a >= n_axons) {
            throw Error(ErrorCode::IndexOutOfRange, "axon index " + std::to_string(a));
        }
    }

    StepCounters counters;

    // Neuron update pass. Draws are taken for every neuron in index order.
    for (std::size_t i = 0; i < n; ++i) {
        noise_[i] = noise_sample(nu_[i], state.rng);
    }
    kernels_->update_neurons(state.membrane.data(), noise_.data(), theta_.data(), lambda_.data(), is_ann_.data(),
                             state.fired_neurons.data(), n, saturating);
    counters.neuron_scan_cycles = (n + kLanes - 1) / kLanes;

    std::fill(state.fired_axons.begin(), state.fired_axons.end(), 0);
    for (auto a : active_axons) {
        state.fired_axons[a] = 1;
    }

    // Phase 1: pointer fetch.
    queue_.clear();
    for (std::uint32_t a = 0; a < n_axons; ++a) {
        if (state.fired_axons[a]) {
            queue_.push_back(image.axon_pointer(a));
        }
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        if (state.fired_neurons[i]) {
            queue_.push_back(image.neuron_pointer(i));
        }
    }
    counters.pointer_row_reads = queue_.size();

    // Phase 2: synapse fetch and accumulation, queue order then lane order.
    const auto slots = image.slots();
    for (const auto& ptr : queue_) {
        if (!ptr.valid || std::uint64_t{ptr.base_row} + ptr.row_count > image.num_rows() ||
            ptr.row_count % kRowsPerSegment != 0) {
            throw Error(ErrorCode::IndexOutOfRange, "pointer to rows " + std::to_string(ptr.base_row) + "+" +
                                                        std::to_string(ptr.row_count) + " outside image");
        }
        counters.synapse_row_reads += ptr.row_count;
        for (std::uint32_t seg = 0; seg < ptr.row_count / kRowsPerSegment; ++seg) {
            const std::uint64_t* segment =
                slots.data() + (std::uint64_t{ptr.base_row} + seg * kRowsPerSegment) * kSlotsPerRow;
            if (!kernels_->accumulate_segment(segment, state.membrane.data(), static_cast<std::uint32_t>(n),
                                              saturating)) {
                throw Error(ErrorCode::IndexOutOfRange, "synapse targets a neuron beyond the image");
            }
        }
    }

    counters.total_cycles = counters.neuron_scan_cycles + std::uint64_t{cycles_per_row_} * counters.hbm_accesses();
    ++state.t;
    if (delta != nullptr) {
        *delta = counters;
    }

    std::vector<std::uint32_t> fired_outputs;
    for (auto o : outputs_) {
        if (state.fired_neurons[o]) {
            fired_outputs.push_back(o);
        }
    }
    return fired_outputs;
}

RunResult run(const hbm::HbmImage& image, const std::vector<std::vector<std::string>>& schedule, std::size_t steps,
              std::uint64_t seed, const CostConfig& config)
{
    config.validate();
    EventEngine engine(image, config.cycles_per_row);
    RunResult result;
    result.final_state = engine.make_state(seed);
    std::vector<StepCounters> per_step;
    per_step.reserve(steps);
    const auto& st = image.symtab();
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<std::uint32_t> active(st.bias_axons().begin(), st.bias_axons().end());
        if (t < schedule.size()) {
            for (const auto& key : schedule[t]) {
                auto a = st.find_axon(key);
                if (!a) {
                    throw Error(ErrorCode::UnknownAxonKey, "step " + std::to_string(t) + ": no axon '" + key + "'");
                }
                active.push_back(*a);
            }
        }
        StepCounters delta;
        const auto fired = engine.step(result.final_state, active, &delta);
        per_step.push_back(delta);
        std::vector<std::string> keys;
        for (auto i : fired) {
            keys.push_back(st.neuron_keys()[i]);
        }
        result.trace.push_back(std::move(keys));
    }
    result.cost = make_cost_report(std::move(per_step), config);
    return result;
}

LinearFit scaling_regression(std::span<const std::pair<double, double>> points)
{
    if (points.size() < 3) {
        throw Error(ErrorCode::DegenerateInput, "regression needs at least three points");
    }
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0.0) {
        throw Error(ErrorCode::DegenerateInput, "all x values are identical");
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (const auto& [x, y] : points) {
            const double e = y - (fit.slope * x + fit.intercept);
            ss_res += e * e;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    }
    return fit;
}

} // namespace spikecore
