#include "spikecore/neuron_model.hpp"

#include <string>

#include "spikecore/error.hpp"

namespace spikecore {

namespace {

void check_nu(std::int64_t nu)
{
    if (nu < NeuronModel::kNuMin || nu > NeuronModel::kNuMax) {
        throw Error(ErrorCode::InvalidArgument, "noise shift nu=" + std::to_string(nu) + " outside [-32, 31]");
    }
}

void check_theta(std::int64_t theta)
{
    if (theta < std::numeric_limits<std::int32_t>::min() || theta > std::numeric_limits<std::int32_t>::max()) {
        throw Error(ErrorCode::InvalidArgument, "threshold " + std::to_string(theta) + " does not fit 32 bits");
    }
}

} // namespace

NeuronModel NeuronModel::lif(std::int64_t theta, std::int64_t nu, std::int64_t lambda)
{
    check_theta(theta);
    check_nu(nu);
    if (lambda < 0 || lambda > kLambdaMax) {
        throw Error(ErrorCode::InvalidArgument, "leak lambda=" + std::to_string(lambda) + " outside [0, 63]");
    }
    return NeuronModel{NeuronKind::LIF, static_cast<std::int32_t>(theta), static_cast<std::int8_t>(nu),
                       static_cast<std::uint8_t>(lambda)};
}

NeuronModel NeuronModel::ann(std::int64_t theta, std::int64_t nu)
{
    check_theta(theta);
    check_nu(nu);
    return NeuronModel{NeuronKind::ANN, static_cast<std::int32_t>(theta), static_cast<std::int8_t>(nu), 0};
}

NeuronStep step_neuron(const NeuronModel& model, std::int32_t v, std::int64_t synaptic_input, SplitMix64& rng,
                       bool saturating) noexcept
{
    v = membrane_add(v, noise_sample(model.nu, rng), saturating);
    const auto [spiked, after] = threshold_and_reset(v, model.theta);
    v = model.kind == NeuronKind::LIF ? leak(after, model.lambda) : 0;
    return {spiked, membrane_add(v, synaptic_input, saturating)};
}

} // namespace spikecore
