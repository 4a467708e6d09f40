#pragma once

// Emulated HBM image format v1.
//
// Memory is a sequence of rows, each row eight 64-bit slots; two rows form a
// 16-slot segment. A slot's lane is its index 0..15 within the segment. The
// image has four sections, in order: model definitions, axon pointers,
// neuron pointers, synapses. Every section starts on a segment boundary.
//
// Pointer slot:   bit 63 valid | bits 43..32 row_count | bits 31..0 base_row
// Synapse slot:   bit 63 valid | bit 62 output flag | bit 61 dummy |
//                 bits 37..16 post index | bits 15..0 weight (two's complement)
// Model slot A:   bit 63 valid | bit 62 ANN | bits 45..40 lambda |
//                 bits 37..32 nu (6-bit two's complement) | bits 31..0 theta
// Model slot B:   bits 63..32 neuron count | bits 31..0 first neuron index
//
// Dummy synapses (padding for neurons without synapses and carriers for
// output flags) are valid but contribute nothing and are dropped on
// decompilation.

#include <cstdint>

#include "spikecore/neuron_model.hpp"

namespace spikecore::hbm {

inline constexpr unsigned kSlotBits = 64;
inline constexpr unsigned kSlotsPerRow = 8;
inline constexpr unsigned kRowsPerSegment = 2;
inline constexpr unsigned kLanes = kSlotsPerRow * kRowsPerSegment;
inline constexpr std::uint64_t kDefaultCapacityRows = (std::uint64_t{8} << 30) / (kSlotsPerRow * kSlotBits / 8);
inline constexpr std::uint32_t kMaxRowCount = (1U << 12) - 1;
inline constexpr std::uint32_t kMaxNeurons = 1U << 22;
inline constexpr unsigned kModelSlots = 2;

/// Lane of a pointer or synapse for a given axon/neuron index. All placement
/// goes through this one function.
constexpr unsigned lane_of(std::uint32_t index) noexcept
{
    return index % kLanes;
}

struct Section {
    std::uint64_t begin = 0; ///< first row
    std::uint64_t end = 0;   ///< one past the last row

    std::uint64_t rows() const noexcept { return end - begin; }
    bool contains(std::uint64_t row) const noexcept { return row >= begin && row < end; }
    bool operator==(const Section&) const = default;
};

struct HbmGeometry {
    std::uint64_t capacity_rows = kDefaultCapacityRows;
    Section models;
    Section axon_pointers;
    Section neuron_pointers;
    Section synapses;

    std::uint64_t used_rows() const noexcept { return synapses.end; }
    bool operator==(const HbmGeometry&) const = default;
};

struct PointerSlot {
    bool valid = false;
    std::uint32_t base_row = 0;
    std::uint16_t row_count = 0;

    static constexpr std::uint64_t kValid = std::uint64_t{1} << 63;

    constexpr std::uint64_t encode() const noexcept
    {
        return (valid ? kValid : 0) | (std::uint64_t{row_count & 0xFFFU} << 32) | base_row;
    }
    static constexpr PointerSlot decode(std::uint64_t raw) noexcept
    {
        return {(raw & kValid) != 0, static_cast<std::uint32_t>(raw & 0xFFFFFFFFULL),
                static_cast<std::uint16_t>((raw >> 32) & 0xFFFU)};
    }
    /// Reserved bits must be zero in a well-formed image.
    static constexpr bool reserved_clear(std::uint64_t raw) noexcept
    {
        return (raw & ~(kValid | (std::uint64_t{0xFFF} << 32) | 0xFFFFFFFFULL)) == 0;
    }
    bool operator==(const PointerSlot&) const = default;
};

struct SynapseSlot {
    bool valid = false;
    bool output_flag = false;
    bool dummy = false;
    std::uint32_t post = 0;
    std::int16_t weight = 0;

    static constexpr std::uint64_t kValid = std::uint64_t{1} << 63;
    static constexpr std::uint64_t kOutput = std::uint64_t{1} << 62;
    static constexpr std::uint64_t kDummy = std::uint64_t{1} << 61;
    static constexpr unsigned kPostShift = 16;
    static constexpr std::uint64_t kPostMask = (std::uint64_t{1} << 22) - 1;

    constexpr std::uint64_t encode() const noexcept
    {
        return (valid ? kValid : 0) | (output_flag ? kOutput : 0) | (dummy ? kDummy : 0) |
               ((std::uint64_t{post} & kPostMask) << kPostShift) |
               static_cast<std::uint16_t>(weight);
    }
    static constexpr SynapseSlot decode(std::uint64_t raw) noexcept
    {
        return {(raw & kValid) != 0, (raw & kOutput) != 0, (raw & kDummy) != 0,
                static_cast<std::uint32_t>((raw >> kPostShift) & kPostMask),
                static_cast<std::int16_t>(static_cast<std::uint16_t>(raw & 0xFFFFU))};
    }
    static constexpr bool reserved_clear(std::uint64_t raw) noexcept
    {
        return (raw & ~(kValid | kOutput | kDummy | (kPostMask << kPostShift) | 0xFFFFULL)) == 0;
    }
    bool operator==(const SynapseSlot&) const = default;
};

/// A neuron model plus the contiguous neuron index range that uses it.
struct ModelGroup {
    NeuronModel model;
    std::uint32_t first = 0;
    std::uint32_t count = 0;

    static constexpr std::uint64_t kValid = std::uint64_t{1} << 63;
    static constexpr std::uint64_t kAnn = std::uint64_t{1} << 62;

    constexpr std::uint64_t encode_params() const noexcept
    {
        return kValid | (model.kind == NeuronKind::ANN ? kAnn : 0) |
               (std::uint64_t{model.lambda & 0x3FU} << 40) |
               (std::uint64_t{static_cast<std::uint8_t>(model.nu) & 0x3FU} << 32) |
               static_cast<std::uint32_t>(model.theta);
    }
    constexpr std::uint64_t encode_range() const noexcept { return (std::uint64_t{count} << 32) | first; }

    static constexpr ModelGroup decode(std::uint64_t params, std::uint64_t range) noexcept
    {
        ModelGroup g;
        g.model.kind = (params & kAnn) ? NeuronKind::ANN : NeuronKind::LIF;
        g.model.lambda = static_cast<std::uint8_t>((params >> 40) & 0x3FU);
        const auto nu6 = static_cast<std::int32_t>((params >> 32) & 0x3FU);
        g.model.nu = static_cast<std::int8_t>(nu6 >= 32 ? nu6 - 64 : nu6);
        g.model.theta = static_cast<std::int32_t>(static_cast<std::uint32_t>(params & 0xFFFFFFFFULL));
        g.first = static_cast<std::uint32_t>(range & 0xFFFFFFFFULL);
        g.count = static_cast<std::uint32_t>(range >> 32);
        return g;
    }
    bool operator==(const ModelGroup&) const = default;
};

/// Rows needed to hold `count` slots, rounded up to whole segments.
constexpr std::uint64_t rows_for_slots(std::uint64_t count) noexcept
{
    return (count + kLanes - 1) / kLanes * kRowsPerSegment;
}

} // namespace spikecore::hbm
