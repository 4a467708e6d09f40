#pragma once

#include <cstdint>
#include <limits>

namespace spikecore {

enum class NeuronKind : std::uint8_t { LIF, ANN };

/// Per-neuron update parameters. `lambda` is meaningful for LIF only and is
/// normalised to 0 for ANN models.
struct NeuronModel {
    NeuronKind kind = NeuronKind::LIF;
    std::int32_t theta = 0;
    std::int8_t nu = -17;
    std::uint8_t lambda = 0;

    static constexpr int kNuMin = -32;
    static constexpr int kNuMax = 31;
    static constexpr int kLambdaMax = 63;

    /// Throws InvalidArgument when nu or lambda are out of their 6-bit ranges.
    static NeuronModel lif(std::int64_t theta, std::int64_t nu, std::int64_t lambda);
    static NeuronModel ann(std::int64_t theta, std::int64_t nu);

    bool operator==(const NeuronModel&) const = default;
};

/// Noise shift at or below which the noise sample is exactly zero.
inline constexpr int kNoiseDisabledNu = -17;

/// Raw noise draws lie in [-2^16, 2^16).
inline constexpr std::int64_t kNoiseHalfRange = std::int64_t{1} << 16;

/// SplitMix64. One 64-bit draw per neuron per timestep, in ascending neuron
/// index order, shared by every backend.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    std::uint64_t next() noexcept
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state() const noexcept { return state_; }

    bool operator==(const SplitMix64&) const = default;

private:
    std::uint64_t state_;
};

/// Reduces a 64-bit draw modulo 2^17 onto [-2^16, 2^16).
constexpr std::int64_t raw_noise(std::uint64_t draw) noexcept
{
    return static_cast<std::int64_t>(draw & 0x1FFFFULL) - kNoiseHalfRange;
}

/// Shapes a raw draw into a noise sample: the LSB is forced to one before the
/// shift, then the value is shifted left by nu (nu > 0) or arithmetically
/// right by -nu (nu < 0). nu <= -17 yields zero.
constexpr std::int64_t shape_noise(std::int64_t raw, int nu) noexcept
{
    if (nu <= kNoiseDisabledNu) {
        return 0;
    }
    const std::int64_t odd = raw | 1;
    if (nu > 0) {
        return odd * (std::int64_t{1} << nu);
    }
    if (nu < 0) {
        return odd >> (-nu);
    }
    return odd;
}

/// Consumes exactly one draw.
inline std::int64_t noise_sample(int nu, SplitMix64& rng) noexcept
{
    return shape_noise(raw_noise(rng.next()), nu);
}

constexpr std::int32_t saturate32(std::int64_t v) noexcept
{
    constexpr std::int64_t lo = std::numeric_limits<std::int32_t>::min();
    constexpr std::int64_t hi = std::numeric_limits<std::int32_t>::max();
    return static_cast<std::int32_t>(v < lo ? lo : (v > hi ? hi : v));
}

constexpr std::int32_t wrap32(std::int64_t v) noexcept
{
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(static_cast<std::uint64_t>(v)));
}

/// Membrane addition under the configured overflow policy.
constexpr std::int32_t membrane_add(std::int32_t v, std::int64_t delta, bool saturating) noexcept
{
    const std::int64_t sum = static_cast<std::int64_t>(v) + delta;
    return saturating ? saturate32(sum) : wrap32(sum);
}

struct ThresholdResult {
    bool spiked;
    std::int32_t v;
};

/// Strict comparison: a membrane equal to theta does not spike.
constexpr ThresholdResult threshold_and_reset(std::int32_t v, std::int32_t theta) noexcept
{
    return v > theta ? ThresholdResult{true, 0} : ThresholdResult{false, v};
}

/// v - floor(v / 2^lambda). Floor (not truncating) division, so negative
/// potentials decay toward -1.
constexpr std::int32_t leak(std::int32_t v, unsigned lambda) noexcept
{
    const std::int64_t wide = v;
    const std::int64_t decay = wide >> (lambda > 63 ? 63 : lambda);
    return static_cast<std::int32_t>(wide - decay);
}

struct NeuronStep {
    bool spiked;
    std::int32_t v;
};

/// One timestep of one neuron: noise, threshold/reset, leak (LIF) or clear
/// (ANN), then integration of the already-summed synaptic input.
NeuronStep step_neuron(const NeuronModel& model, std::int32_t v, std::int64_t synaptic_input,
                       SplitMix64& rng, bool saturating = true) noexcept;

} // namespace spikecore
