// AVX2 distance kernel: four control units per block, one per lane. Per lane
// the instruction sequence mirrors distance_rows_scalar exactly (mul, mul,
// add / max in the same covariate order, no FMA), giving bit-identical
// results. This file is the only TU compiled with -mavx2.

#include "csm/kernels.hpp"

#if defined(CSM_HAVE_AVX2)

#include <immintrin.h>

namespace csm::kernels {

namespace {

inline __m256d abs_pd(__m256d x) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  return _mm256_andnot_pd(sign_mask, x);
}

}  // namespace

void distance_rows_avx2(const double* query, const PackedRows& packed,
                        const double* v_diag, Norm norm, double* out) {
  const std::size_t p = packed.cols;
  const std::size_t blocks = packed.blocks();
  alignas(32) double lanes[kLanes];

  for (std::size_t b = 0; b < blocks; ++b) {
    const double* block = packed.data.data() + b * p * kLanes;
    __m256d acc = _mm256_setzero_pd();
    if (norm == Norm::L2) {
      for (std::size_t k = 0; k < p; ++k) {
        const __m256d xk = _mm256_set1_pd(query[k]);
        const __m256d ck = _mm256_loadu_pd(block + k * kLanes);
        const __m256d diff = _mm256_sub_pd(xk, ck);
        const __m256d scaled = _mm256_mul_pd(diff, _mm256_set1_pd(v_diag[k]));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(scaled, scaled));
      }
      acc = _mm256_sqrt_pd(acc);
    } else {
      for (std::size_t k = 0; k < p; ++k) {
        const __m256d xk = _mm256_set1_pd(query[k]);
        const __m256d ck = _mm256_loadu_pd(block + k * kLanes);
        const __m256d diff = _mm256_sub_pd(xk, ck);
        const __m256d scaled = abs_pd(_mm256_mul_pd(diff, _mm256_set1_pd(v_diag[k])));
        acc = _mm256_max_pd(acc, scaled);
      }
    }
    _mm256_store_pd(lanes, acc);
    const std::size_t base = b * kLanes;
    const std::size_t valid =
        packed.rows - base < kLanes ? packed.rows - base : kLanes;
    for (std::size_t lane = 0; lane < valid; ++lane) out[base + lane] = lanes[lane];
  }
}

}  // namespace csm::kernels

#endif  // CSM_HAVE_AVX2
