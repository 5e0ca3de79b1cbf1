#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "csm/dataset.hpp"
#include "csm/matrix.hpp"

namespace csm::kernels {

// Runtime-selected implementations of the scaled-distance inner loop. The
// AVX2 variant vectorizes across control units (one distance per lane) while
// keeping the per-covariate operation sequence of the scalar reference, so
// both backends produce bit-identical results; the equivalence tests assert
// exact equality, not tolerance.
enum class Backend { Scalar, Avx2 };

Backend active_backend();
bool backend_supported(Backend backend);
// Throws InvalidArgument if the backend is not supported on this machine.
// Honors the CSM_KERNELS environment variable ("scalar"/"avx2") at startup.
void set_backend(Backend backend);
const char* backend_name(Backend backend);

inline constexpr int kLanes = 4;

// SoA block layout: rows are grouped in blocks of kLanes; within a block,
// the values of covariate k for the block's rows are contiguous:
//   data[(block * cols + k) * kLanes + lane]
// Padding lanes hold zeros and their outputs are discarded.
struct PackedRows {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::size_t blocks() const { return (rows + kLanes - 1) / kLanes; }
};

PackedRows pack_rows(const Matrix& x, const std::vector<int>& row_indices);

// out[j] = scaled distance between query and packed row j, j = 0..rows-1.
// v_diag has length cols. Both norms share the contract of
// csm::scaled_distance; entries are reproducible bit-exactly.
void distance_rows(const double* query, const PackedRows& packed,
                   const double* v_diag, Norm norm, double* out);

// Explicit-backend entry points, used by the equivalence tests.
void distance_rows_scalar(const double* query, const PackedRows& packed,
                          const double* v_diag, Norm norm, double* out);
#if defined(CSM_HAVE_AVX2)
void distance_rows_avx2(const double* query, const PackedRows& packed,
                        const double* v_diag, Norm norm, double* out);
#endif

}  // namespace csm::kernels
