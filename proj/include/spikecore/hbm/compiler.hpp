#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "spikecore/hbm/image.hpp"
#include "spikecore/network.hpp"

namespace spikecore::hbm {

/// Lane assignment of one source's synapses. Each segment maps lane -> index
/// into the target list, or -1 for an empty lane.
struct Placement {
    std::vector<std::array<std::int32_t, kLanes>> segments;

    std::size_t rows() const noexcept { return segments.size() * kRowsPerSegment; }
};

/// Greedy first-fit over ascending post index: each target goes into the
/// first segment whose lane (post mod 16) is free. The segment count equals
/// the largest per-lane collision count. No targets yields one empty segment
/// (filled with zero-weight padding by the compiler). FanOutExceeded when
/// targets exceed `max_fan_out`.
Placement place_source_synapses(std::span<const Synapse> targets, std::uint32_t max_fan_out = 4096);

struct CompileOptions {
    std::uint64_t capacity_rows = kDefaultCapacityRows;
};

/// Lays a validated network out into an image. CapacityExceeded when a
/// region exceeds the 12-bit row count, the neuron count exceeds the 22-bit
/// index, or the image exceeds capacity; FanOutExceeded as above.
HbmImage compile(const Network& net, const CompileOptions& options = {});

/// Rebuilds the network from an image, dropping dummy synapses and recovering
/// outputs from the output flags. CorruptImage on any invariant violation.
Network decompile(const HbmImage& image);

/// Rewrites the weight field of one synapse in place. NoSuchSynapse,
/// WeightOverflow.
void patch_weight(HbmImage& image, std::string_view pre_key, std::string_view post_key, std::int64_t weight);

/// Reads one weight straight from the image. NoSuchSynapse.
std::int16_t read_weight(const HbmImage& image, std::string_view pre_key, std::string_view post_key);

/// Exhaustive structural check (alignment, non-overlap, coverage, reserved
/// bits, model ranges). Throws CorruptImage describing the first violation.
void verify_image(const HbmImage& image);

struct SectionSummary {
    std::size_t models = 0;
    std::size_t axon_pointers = 0;
    std::size_t neuron_pointers = 0;
    std::size_t synapse_rows = 0;
    std::size_t real_synapses = 0;
    std::size_t dummy_synapses = 0;
    std::uint64_t total_rows = 0;
};

SectionSummary summarize(const HbmImage& image);

} // namespace spikecore::hbm
