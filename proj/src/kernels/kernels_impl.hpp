#pragma once

#include <cstddef>
#include <cstdint>

namespace spikecore::kernels::detail {

void update_neurons_scalar(std::int32_t* v, const std::int64_t* noise, const std::int32_t* theta,
                           const std::uint8_t* lambda, const std::uint8_t* is_ann, std::uint8_t* fired,
                           std::size_t n, bool saturating);
bool accumulate_segment_scalar(const std::uint64_t* segment, std::int32_t* v, std::uint32_t n_neurons,
                               bool saturating);

#if defined(__x86_64__) || defined(_M_X64)
#define SPIKECORE_HAVE_AVX2_KERNELS 1
void update_neurons_avx2(std::int32_t* v, const std::int64_t* noise, const std::int32_t* theta,
                         const std::uint8_t* lambda, const std::uint8_t* is_ann, std::uint8_t* fired,
                         std::size_t n, bool saturating);
bool accumulate_segment_avx2(const std::uint64_t* segment, std::int32_t* v, std::uint32_t n_neurons,
                             bool saturating);
#endif

} // namespace spikecore::kernels::detail
