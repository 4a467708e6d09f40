#include "spikecore/hbm/compiler.hpp"

#include <algorithm>
#include <set>

#include "spikecore/error.hpp"

namespace spikecore::hbm {

namespace {

constexpr std::int32_t kEmptyLane = -1;
constexpr std::int32_t kFlagLane = -2;

using Segment = std::array<std::uint64_t, kLanes>;

std::uint64_t slot_index(std::uint64_t row, unsigned slot)
{
    return row * kSlotsPerRow + slot;
}

/// Location of lane `lane` of segment `seg` in a region starting at `base`.
std::pair<std::uint64_t, unsigned> lane_location(std::uint64_t base, std::size_t seg, unsigned lane)
{
    return {base + seg * kRowsPerSegment + lane / kSlotsPerRow, lane % kSlotsPerRow};
}

std::uint64_t padding_slot(unsigned lane)
{
    return SynapseSlot{true, false, true, lane, 0}.encode();
}

struct Region {
    std::vector<Segment> segments;
};

} // namespace

Placement place_source_synapses(std::span<const Synapse> targets, std::uint32_t max_fan_out)
{
    if (targets.size() > max_fan_out) {
        throw Error(ErrorCode::FanOutExceeded,
                    "fan-out " + std::to_string(targets.size()) + " > " + std::to_string(max_fan_out));
    }
    std::vector<std::int32_t> order(targets.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<std::int32_t>(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::int32_t a, std::int32_t b) { return targets[a].post < targets[b].post; });

    Placement p;
    std::array<std::size_t, kLanes> fill{};
    for (auto idx : order) {
        const unsigned lane = lane_of(targets[idx].post);
        // First free segment for this lane is the count of earlier occupants.
        const std::size_t seg = fill[lane]++;
        if (seg == p.segments.size()) {
            p.segments.emplace_back();
            p.segments.back().fill(kEmptyLane);
        }
        p.segments[seg][lane] = idx;
    }
    if (p.segments.empty()) {
        p.segments.emplace_back();
        p.segments.back().fill(kEmptyLane);
    }
    return p;
}

HbmImage compile(const Network& net, const CompileOptions& options)
{
    const auto n_neurons = net.num_neurons();
    const auto n_axons = net.num_axons();
    if (n_neurons > kMaxNeurons) {
        throw Error(ErrorCode::CapacityExceeded,
                    std::to_string(n_neurons) + " neurons exceed the 22-bit post index");
    }

    // Outputs that no synapse targets carry their flag in their own region.
    std::vector<std::uint8_t> targeted(n_neurons, 0);
    for (std::uint32_t a = 0; a < n_axons; ++a) {
        for (const auto& s : net.axon_synapses(a)) {
            targeted[s.post] = 1;
        }
    }
    for (std::uint32_t j = 0; j < n_neurons; ++j) {
        for (const auto& s : net.neuron_synapses(j)) {
            targeted[s.post] = 1;
        }
    }
    std::vector<std::uint8_t> flag_pending(n_neurons, 0);
    for (auto o : net.outputs()) {
        flag_pending[o] = 1;
    }

    auto build_region = [&](std::span<const Synapse> syn, std::optional<std::uint32_t> self) {
        const bool padding = syn.empty() && self.has_value();
        Region region;
        if (syn.empty() && !self) {
            return region; // axon without synapses: zero-length region
        }
        const Placement p = place_source_synapses(syn, net.config().max_fan_out);
        region.segments.resize(p.segments.size());
        for (std::size_t seg = 0; seg < p.segments.size(); ++seg) {
            for (unsigned lane = 0; lane < kLanes; ++lane) {
                const std::int32_t idx = p.segments[seg][lane];
                std::uint64_t raw = 0;
                if (idx >= 0) {
                    const auto& s = syn[static_cast<std::size_t>(idx)];
                    SynapseSlot slot{true, false, false, s.post, s.weight};
                    if (flag_pending[s.post]) {
                        slot.output_flag = true;
                        flag_pending[s.post] = 0;
                    }
                    raw = slot.encode();
                } else if (padding) {
                    raw = padding_slot(lane);
                }
                region.segments[seg][lane] = raw;
            }
        }
        if (self && flag_pending[*self] && !targeted[*self]) {
            const unsigned lane = lane_of(*self);
            const std::uint64_t flag = SynapseSlot{true, true, true, *self, 0}.encode();
            if (padding) {
                region.segments.front()[lane] = flag;
            } else {
                Segment extra{};
                extra[lane] = flag;
                region.segments.push_back(extra);
            }
            flag_pending[*self] = 0;
        }
        if (region.segments.size() * kRowsPerSegment > kMaxRowCount) {
            throw Error(ErrorCode::CapacityExceeded, "synapse region of " +
                                                         std::to_string(region.segments.size() * kRowsPerSegment) +
                                                         " rows exceeds the 12-bit row count");
        }
        return region;
    };

    std::vector<Region> regions;
    regions.reserve(n_axons + n_neurons);
    for (std::uint32_t a = 0; a < n_axons; ++a) {
        regions.push_back(build_region(net.axon_synapses(a), std::nullopt));
    }
    for (std::uint32_t j = 0; j < n_neurons; ++j) {
        regions.push_back(build_region(net.neuron_synapses(j), j));
    }

    HbmGeometry g;
    g.capacity_rows = options.capacity_rows;
    g.models = {0, rows_for_slots(net.models().size() * kModelSlots)};
    g.axon_pointers = {g.models.end, g.models.end + rows_for_slots(n_axons)};
    g.neuron_pointers = {g.axon_pointers.end, g.axon_pointers.end + rows_for_slots(n_neurons)};
    std::uint64_t synapse_rows = 0;
    for (const auto& r : regions) {
        synapse_rows += r.segments.size() * kRowsPerSegment;
    }
    g.synapses = {g.neuron_pointers.end, g.neuron_pointers.end + synapse_rows};
    if (g.used_rows() > g.capacity_rows) {
        throw Error(ErrorCode::CapacityExceeded, "image needs " + std::to_string(g.used_rows()) +
                                                     " rows, capacity is " + std::to_string(g.capacity_rows));
    }
    if (g.used_rows() > 0xFFFFFFFFULL) {
        throw Error(ErrorCode::CapacityExceeded, "row addresses exceed 32 bits");
    }

    std::vector<std::uint64_t> slots(g.used_rows() * kSlotsPerRow, 0);

    // Model definitions with their neuron ranges.
    std::uint32_t first = 0;
    for (std::size_t m = 0; m < net.models().size(); ++m) {
        ModelGroup group;
        group.model = net.models()[m].model;
        group.first = first;
        while (first < n_neurons && net.neuron_models()[first] == m) {
            ++first;
        }
        group.count = first - group.first;
        const auto base = slot_index(g.models.begin, 0) + m * kModelSlots;
        slots[base] = group.encode_params();
        slots[base + 1] = group.encode_range();
    }

    std::uint64_t cursor = g.synapses.begin;
    for (std::size_t src = 0; src < regions.size(); ++src) {
        const auto& region = regions[src];
        PointerSlot ptr{true, static_cast<std::uint32_t>(cursor),
                        static_cast<std::uint16_t>(region.segments.size() * kRowsPerSegment)};
        const std::uint64_t ptr_slot = src < n_axons ? slot_index(g.axon_pointers.begin, 0) + src
                                                     : slot_index(g.neuron_pointers.begin, 0) + (src - n_axons);
        slots[ptr_slot] = ptr.encode();
        for (std::size_t seg = 0; seg < region.segments.size(); ++seg) {
            for (unsigned lane = 0; lane < kLanes; ++lane) {
                const auto [row, s] = lane_location(cursor, seg, lane);
                slots[slot_index(row, s)] = region.segments[seg][lane];
            }
        }
        cursor += region.segments.size() * kRowsPerSegment;
    }

    std::vector<std::string> model_names;
    for (const auto& m : net.models()) {
        model_names.push_back(m.name);
    }
    return HbmImage(g, std::move(slots),
                    SymbolTable(std::move(model_names), net.axon_keys(), net.neuron_keys(), net.bias_axons()),
                    net.config());
}

namespace {

[[noreturn]] void corrupt(const std::string& what)
{
    throw Error(ErrorCode::CorruptImage, what);
}

struct Walk {
    // Per source (axons then neurons): decoded real synapses.
    std::vector<std::vector<Synapse>> synapses;
    std::set<std::uint32_t> outputs;
    std::vector<ModelGroup> groups;
};

Walk walk_image(const HbmImage& image, bool collect)
{
    const auto& g = image.geometry();
    const auto n_neurons = image.num_neurons();
    const auto n_axons = image.num_axons();
    const auto slots = image.slots();
    Walk w;

    // Model section.
    w.groups = image.model_groups();
    std::uint32_t next = 0;
    for (std::size_t m = 0; m < w.groups.size(); ++m) {
        const auto base = g.models.begin * kSlotsPerRow + m * kModelSlots;
        if (!(slots[base] & ModelGroup::kValid)) {
            corrupt("model " + std::to_string(m) + " not valid");
        }
        if ((slots[base] & ~(ModelGroup::kValid | ModelGroup::kAnn | (0x3FULL << 40) | (0x3FULL << 32) |
                             0xFFFFFFFFULL)) != 0) {
            corrupt("model " + std::to_string(m) + " has reserved bits set");
        }
        const auto& grp = w.groups[m];
        if (grp.model.kind == NeuronKind::ANN && grp.model.lambda != 0) {
            corrupt("ANN model with leak field");
        }
        if (grp.first != next) {
            corrupt("model " + std::to_string(m) + " neuron range is not contiguous");
        }
        next += grp.count;
    }
    if (next != n_neurons) {
        corrupt("model ranges cover " + std::to_string(next) + " of " + std::to_string(n_neurons) + " neurons");
    }
    for (auto i = g.models.begin * kSlotsPerRow + w.groups.size() * kModelSlots; i < g.models.end * kSlotsPerRow;
         ++i) {
        if (slots[i] != 0) {
            corrupt("stray data in model section");
        }
    }

    // Pointers and their regions.
    std::vector<std::uint32_t> owner(g.synapses.rows(), 0xFFFFFFFFU);
    const std::size_t n_sources = n_axons + n_neurons;
    if (collect) {
        w.synapses.resize(n_sources);
    }
    auto check_ptr_section = [&](const Section& sec, std::size_t used) {
        for (auto i = sec.begin * kSlotsPerRow + used; i < sec.end * kSlotsPerRow; ++i) {
            if (slots[i] != 0) {
                corrupt("stray pointer beyond the last source");
            }
        }
    };
    check_ptr_section(g.axon_pointers, n_axons);
    check_ptr_section(g.neuron_pointers, n_neurons);

    for (std::size_t src = 0; src < n_sources; ++src) {
        const bool is_axon = src < n_axons;
        const auto idx = static_cast<std::uint32_t>(is_axon ? src : src - n_axons);
        const auto [prow, pslot] = is_axon ? image.axon_pointer_location(idx) : image.neuron_pointer_location(idx);
        const std::uint64_t raw = image.slot(prow, pslot);
        const auto ptr = PointerSlot::decode(raw);
        const std::string who = std::string(is_axon ? "axon " : "neuron ") + std::to_string(idx);
        if (!ptr.valid || !PointerSlot::reserved_clear(raw)) {
            corrupt(who + " pointer invalid");
        }
        if (ptr.row_count % kRowsPerSegment != 0) {
            corrupt(who + " region is not whole segments");
        }
        if (!is_axon && ptr.row_count == 0) {
            corrupt(who + " has no synapse region");
        }
        if (ptr.row_count == 0) {
            continue;
        }
        if (ptr.base_row < g.synapses.begin || ptr.base_row + std::uint64_t{ptr.row_count} > g.synapses.end ||
            (ptr.base_row - g.synapses.begin) % kRowsPerSegment != 0) {
            corrupt(who + " region outside synapse section");
        }
        for (std::uint64_t r = ptr.base_row; r < ptr.base_row + ptr.row_count; ++r) {
            auto& o = owner[r - g.synapses.begin];
            if (o != 0xFFFFFFFFU) {
                corrupt(who + " region overlaps source " + std::to_string(o));
            }
            o = static_cast<std::uint32_t>(src);
        }
        const std::size_t n_segments = ptr.row_count / kRowsPerSegment;
        for (std::size_t seg = 0; seg < n_segments; ++seg) {
            for (unsigned lane = 0; lane < kLanes; ++lane) {
                const auto [row, s] = lane_location(ptr.base_row, seg, lane);
                const std::uint64_t sraw = image.slot(row, s);
                if (sraw == 0) {
                    continue;
                }
                const auto syn = SynapseSlot::decode(sraw);
                if (!syn.valid || !SynapseSlot::reserved_clear(sraw)) {
                    corrupt(who + " region holds a malformed slot");
                }
                if (lane_of(syn.post) != lane) {
                    corrupt(who + " synapse to " + std::to_string(syn.post) + " misaligned in lane " +
                            std::to_string(lane));
                }
                if ((!syn.dummy || syn.output_flag) && syn.post >= n_neurons) {
                    corrupt(who + " synapse targets neuron index " + std::to_string(syn.post));
                }
                if (syn.dummy && syn.weight != 0) {
                    corrupt(who + " dummy synapse with nonzero weight");
                }
                if (syn.output_flag) {
                    w.outputs.insert(syn.post);
                }
                if (collect && !syn.dummy) {
                    w.synapses[src].push_back({syn.post, syn.weight});
                }
            }
        }
    }
    for (std::uint64_t r = 0; r < owner.size(); ++r) {
        if (owner[r] != 0xFFFFFFFFU) {
            continue;
        }
        for (unsigned s = 0; s < kSlotsPerRow; ++s) {
            if (image.slot(g.synapses.begin + r, s) != 0) {
                corrupt("synapse row " + std::to_string(g.synapses.begin + r) + " outside every region");
            }
        }
    }
    return w;
}

struct Located {
    std::uint64_t row;
    unsigned slot;
};

Located locate(const HbmImage& image, std::string_view pre_key, std::string_view post_key)
{
    const auto& st = image.symtab();
    PointerSlot ptr;
    if (auto n = st.find_neuron(pre_key)) {
        ptr = image.neuron_pointer(*n);
    } else if (auto a = st.find_axon(pre_key)) {
        ptr = image.axon_pointer(*a);
    } else {
        throw Error(ErrorCode::NoSuchSynapse, "no axon or neuron '" + std::string(pre_key) + "'");
    }
    const auto post = st.find_neuron(post_key);
    if (!post) {
        throw Error(ErrorCode::NoSuchSynapse, "no neuron '" + std::string(post_key) + "'");
    }
    const unsigned lane = lane_of(*post);
    for (std::size_t seg = 0; seg < ptr.row_count / kRowsPerSegment; ++seg) {
        const auto [row, s] = lane_location(ptr.base_row, seg, lane);
        const auto syn = SynapseSlot::decode(image.slot(row, s));
        if (syn.valid && !syn.dummy && syn.post == *post) {
            return {row, s};
        }
    }
    throw Error(ErrorCode::NoSuchSynapse, "no synapse '" + std::string(pre_key) + "' -> '" + std::string(post_key) + "'");
}

} // namespace

void verify_image(const HbmImage& image)
{
    walk_image(image, false);
}

Network decompile(const HbmImage& image)
{
    Walk w = walk_image(image, true);
    const auto& st = image.symtab();
    NetworkAssembler::Parts parts;
    parts.axon_keys = st.axon_keys();
    parts.neuron_keys = st.neuron_keys();
    for (std::size_t m = 0; m < w.groups.size(); ++m) {
        parts.models.push_back({st.model_names()[m], w.groups[m].model});
        parts.neuron_models.insert(parts.neuron_models.end(), w.groups[m].count, static_cast<std::uint32_t>(m));
    }
    const auto n_axons = image.num_axons();
    for (std::size_t src = 0; src < w.synapses.size(); ++src) {
        if (src < n_axons) {
            parts.axon_synapses.push_back(std::move(w.synapses[src]));
        } else {
            parts.neuron_synapses.push_back(std::move(w.synapses[src]));
        }
    }
    parts.outputs.assign(w.outputs.begin(), w.outputs.end());
    parts.bias_axons = st.bias_axons();
    parts.config = image.config();
    try {
        return NetworkAssembler::assemble(std::move(parts));
    } catch (const Error& e) {
        throw Error(ErrorCode::CorruptImage, e.what());
    }
}

void patch_weight(HbmImage& image, std::string_view pre_key, std::string_view post_key, std::int64_t weight)
{
    const auto loc = locate(image, pre_key, post_key);
    if (!fits_int16(weight)) {
        throw Error(ErrorCode::WeightOverflow, "weight " + std::to_string(weight) + " does not fit 16 bits");
    }
    auto syn = SynapseSlot::decode(image.slot(loc.row, loc.slot));
    syn.weight = static_cast<std::int16_t>(weight);
    image.set_slot(loc.row, loc.slot, syn.encode());
}

std::int16_t read_weight(const HbmImage& image, std::string_view pre_key, std::string_view post_key)
{
    const auto loc = locate(image, pre_key, post_key);
    return SynapseSlot::decode(image.slot(loc.row, loc.slot)).weight;
}

SectionSummary summarize(const HbmImage& image)
{
    SectionSummary s;
    s.models = image.num_models();
    s.axon_pointers = image.num_axons();
    s.neuron_pointers = image.num_neurons();
    const auto& g = image.geometry();
    s.synapse_rows = g.synapses.rows();
    s.total_rows = g.used_rows();
    for (std::uint64_t r = g.synapses.begin; r < g.synapses.end; ++r) {
        for (unsigned k = 0; k < kSlotsPerRow; ++k) {
            const auto syn = SynapseSlot::decode(image.slot(r, k));
            if (!syn.valid) {
                continue;
            }
            (syn.dummy ? s.dummy_synapses : s.real_synapses) += 1;
        }
    }
    return s;
}

} // namespace spikecore::hbm
