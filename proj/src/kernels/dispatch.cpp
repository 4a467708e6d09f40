#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"
#include "spikecore/kernels/kernels.hpp"

namespace spikecore::kernels {

std::string_view to_string(Isa isa) noexcept
{
    return isa == Isa::Avx2 ? "avx2" : "scalar";
}

const KernelSet& scalar_kernels() noexcept
{
    static const KernelSet set{Isa::Scalar, detail::update_neurons_scalar, detail::accumulate_segment_scalar};
    return set;
}

const KernelSet* avx2_kernels() noexcept
{
#if defined(SPIKECORE_HAVE_AVX2_KERNELS)
    static const bool supported = __builtin_cpu_supports("avx2");
    static const KernelSet set{Isa::Avx2, detail::update_neurons_avx2, detail::accumulate_segment_avx2};
    return supported ? &set : nullptr;
#else
    return nullptr;
#endif
}

const KernelSet& active_kernels() noexcept
{
    static const KernelSet& chosen = []() -> const KernelSet& {
        const char* forced = std::getenv("SPIKECORE_ISA");
        if (forced != nullptr && std::string_view(forced) == "scalar") {
            return scalar_kernels();
        }
        const KernelSet* avx2 = avx2_kernels();
        return avx2 != nullptr ? *avx2 : scalar_kernels();
    }();
    return chosen;
}

} // namespace spikecore::kernels
