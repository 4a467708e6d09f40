#pragma once

// Inner loops of the event engine. Every kernel has a scalar reference and,
// on x86-64, an AVX2 variant selected at runtime; the two are bit-identical.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace spikecore::kernels {

/// Per-neuron update over `n` neurons: v += noise (64-bit noise, 32-bit
/// result), spike = v > theta with reset to 0, then LIF leak
/// v -= floor(v / 2^lambda) or ANN clear. fired[i] receives 0/1.
using UpdateNeuronsFn = void (*)(std::int32_t* v, const std::int64_t* noise, const std::int32_t* theta,
                                 const std::uint8_t* lambda, const std::uint8_t* is_ann, std::uint8_t* fired,
                                 std::size_t n, bool saturating);

/// Adds the weights of one 16-slot synapse segment into the membranes of
/// their post neurons. Invalid and dummy slots are skipped. Returns false,
/// without touching `v`, if an active slot names a neuron >= n_neurons.
using AccumulateSegmentFn = bool (*)(const std::uint64_t* segment, std::int32_t* v, std::uint32_t n_neurons,
                                     bool saturating);

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct KernelSet {
    Isa isa;
    UpdateNeuronsFn update_neurons;
    AccumulateSegmentFn accumulate_segment;
};

const KernelSet& scalar_kernels() noexcept;

/// nullptr when the build target or the running CPU lacks AVX2.
const KernelSet* avx2_kernels() noexcept;

/// Best set for this CPU. SPIKECORE_ISA=scalar forces the reference path.
const KernelSet& active_kernels() noexcept;

} // namespace spikecore::kernels
