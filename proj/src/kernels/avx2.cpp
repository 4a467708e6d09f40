#include "kernels_impl.hpp"

#if defined(SPIKECORE_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <cstdint>
#include <limits>

#define SPIKECORE_AVX2 __attribute__((target("avx2")))

namespace spikecore::kernels::detail {

namespace {

// 4 x int64 -> 4 x int32 in the low half; wraps unless clamped first.
SPIKECORE_AVX2 inline __m128i narrow_epi64(__m256i x)
{
    const __m256i idx = _mm256_setr_epi32(0, 2, 4, 6, 1, 3, 5, 7);
    return _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(x, idx));
}

SPIKECORE_AVX2 inline __m256i clamp_epi64_to_i32(__m256i x)
{
    const __m256i lo = _mm256_set1_epi64x(std::numeric_limits<std::int32_t>::min());
    const __m256i hi = _mm256_set1_epi64x(std::numeric_limits<std::int32_t>::max());
    x = _mm256_blendv_epi8(x, hi, _mm256_cmpgt_epi64(x, hi));
    return _mm256_blendv_epi8(x, lo, _mm256_cmpgt_epi64(lo, x));
}

// v + noise over 8 lanes, with 64-bit intermediate.
SPIKECORE_AVX2 inline __m256i add_noise(__m256i v, const std::int64_t* noise, bool saturating)
{
    const __m256i n0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(noise));
    const __m256i n1 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(noise + 4));
    __m256i s0 = _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_castsi256_si128(v)), n0);
    __m256i s1 = _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_extracti128_si256(v, 1)), n1);
    if (saturating) {
        s0 = clamp_epi64_to_i32(s0);
        s1 = clamp_epi64_to_i32(s1);
    }
    return _mm256_set_m128i(narrow_epi64(s1), narrow_epi64(s0));
}

SPIKECORE_AVX2 inline __m256i adds_epi32(__m256i a, __m256i b)
{
    const __m256i sum = _mm256_add_epi32(a, b);
    const __m256i overflow = _mm256_and_si256(_mm256_xor_si256(a, sum), _mm256_xor_si256(b, sum));
    const __m256i limit = _mm256_xor_si256(_mm256_srai_epi32(a, 31), _mm256_set1_epi32(std::numeric_limits<std::int32_t>::max()));
    return _mm256_castps_si256(
        _mm256_blendv_ps(_mm256_castsi256_ps(sum), _mm256_castsi256_ps(limit), _mm256_castsi256_ps(overflow)));
}

} // namespace

SPIKECORE_AVX2 void update_neurons_avx2(std::int32_t* v, const std::int64_t* noise, const std::int32_t* theta,
                                        const std::uint8_t* lambda, const std::uint8_t* is_ann,
                                        std::uint8_t* fired, std::size_t n, bool saturating)
{
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(v + i));
        x = add_noise(x, noise + i, saturating);

        const __m256i th = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(theta + i));
        const __m256i spike = _mm256_cmpgt_epi32(x, th);
        x = _mm256_andnot_si256(spike, x);

        // srav fills with the sign bit for shift counts above 31, which is
        // floor division by 2^lambda for every lambda in [0, 63].
        const __m256i shift =
            _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(lambda + i)));
        x = _mm256_sub_epi32(x, _mm256_srav_epi32(x, shift));

        const __m256i ann = _mm256_cmpgt_epi32(
            _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(is_ann + i))), zero);
        x = _mm256_andnot_si256(ann, x);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(v + i), x);

        const int mask = _mm256_movemask_ps(_mm256_castsi256_ps(spike));
        for (int k = 0; k < 8; ++k) {
            fired[i + k] = static_cast<std::uint8_t>((mask >> k) & 1);
        }
    }
    update_neurons_scalar(v + i, noise + i, theta + i, lambda + i, is_ann + i, fired + i, n - i, saturating);
}

SPIKECORE_AVX2 bool accumulate_segment_avx2(const std::uint64_t* segment, std::int32_t* v, std::uint32_t n_neurons,
                                            bool saturating)
{
    // Split 8 slots into their low and high dwords.
    const __m256i split = _mm256_setr_epi32(0, 2, 4, 6, 1, 3, 5, 7);
    const __m256i flag_mask = _mm256_set1_epi32(static_cast<int>(0xA0000000U)); // valid | dummy
    const __m256i want = _mm256_set1_epi32(static_cast<int>(0x80000000U));      // valid, not dummy
    const __m256i limit = _mm256_set1_epi32(static_cast<int>(n_neurons) - 1);

    __m256i post[2];
    __m256i weight[2];
    __m256i active[2];
    for (int half = 0; half < 2; ++half) {
        const auto* p = reinterpret_cast<const __m256i*>(segment + 8 * half);
        const __m256i a = _mm256_permutevar8x32_epi32(_mm256_loadu_si256(p), split);
        const __m256i b = _mm256_permutevar8x32_epi32(_mm256_loadu_si256(p + 1), split);
        const __m256i lo = _mm256_permute2x128_si256(a, b, 0x20);
        const __m256i hi = _mm256_permute2x128_si256(a, b, 0x31);
        active[half] = _mm256_cmpeq_epi32(_mm256_and_si256(hi, flag_mask), want);
        post[half] = _mm256_or_si256(_mm256_srli_epi32(lo, 16),
                                     _mm256_slli_epi32(_mm256_and_si256(hi, _mm256_set1_epi32(0x3F)), 16));
        weight[half] = _mm256_srai_epi32(_mm256_slli_epi32(lo, 16), 16);
    }
    const __m256i bad = _mm256_or_si256(_mm256_and_si256(active[0], _mm256_cmpgt_epi32(post[0], limit)),
                                        _mm256_and_si256(active[1], _mm256_cmpgt_epi32(post[1], limit)));
    if (!_mm256_testz_si256(bad, bad)) {
        return false;
    }

    // Lanes of one segment target distinct neurons, so gather/add/scatter
    // cannot conflict.
    for (int half = 0; half < 2; ++half) {
        const __m256i old = _mm256_mask_i32gather_epi32(_mm256_setzero_si256(), v, post[half], active[half], 4);
        const __m256i sum = saturating ? adds_epi32(old, weight[half]) : _mm256_add_epi32(old, weight[half]);
        alignas(32) std::int32_t out[8];
        alignas(32) std::int32_t idx[8];
        _mm256_store_si256(reinterpret_cast<__m256i*>(out), sum);
        _mm256_store_si256(reinterpret_cast<__m256i*>(idx), post[half]);
        int mask = _mm256_movemask_ps(_mm256_castsi256_ps(active[half]));
        while (mask != 0) {
            const int k = __builtin_ctz(static_cast<unsigned>(mask));
            v[idx[k]] = out[k];
            mask &= mask - 1;
        }
    }
    return true;
}

} // namespace spikecore::kernels::detail

#endif
