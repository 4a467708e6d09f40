#include "kernels_impl.hpp"

#include "spikecore/hbm/layout.hpp"
#include "spikecore/neuron_model.hpp"

namespace spikecore::kernels::detail {

void update_neurons_scalar(std::int32_t* v, const std::int64_t* noise, const std::int32_t* theta,
                           const std::uint8_t* lambda, const std::uint8_t* is_ann, std::uint8_t* fired,
                           std::size_t n, bool saturating)
{
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = threshold_and_reset(membrane_add(v[i], noise[i], saturating), theta[i]);
        fired[i] = r.spiked ? 1 : 0;
        v[i] = is_ann[i] ? 0 : leak(r.v, lambda[i]);
    }
}

bool accumulate_segment_scalar(const std::uint64_t* segment, std::int32_t* v, std::uint32_t n_neurons,
                               bool saturating)
{
    using hbm::SynapseSlot;
    for (unsigned lane = 0; lane < hbm::kLanes; ++lane) {
        const auto s = SynapseSlot::decode(segment[lane]);
        if (s.valid && !s.dummy && s.post >= n_neurons) {
            return false;
        }
    }
    for (unsigned lane = 0; lane < hbm::kLanes; ++lane) {
        const auto s = SynapseSlot::decode(segment[lane]);
        if (s.valid && !s.dummy) {
            v[s.post] = membrane_add(v[s.post], s.weight, saturating);
        }
    }
    return true;
}

} // namespace spikecore::kernels::detail
