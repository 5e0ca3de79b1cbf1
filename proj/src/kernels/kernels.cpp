#include "csm/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "csm/error.hpp"

namespace csm::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(CSM_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend initial_backend() {
  Backend backend = cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
  if (const char* env = std::getenv("CSM_KERNELS")) {
    const std::string value(env);
    if (value == "scalar") {
      backend = Backend::Scalar;
    } else if (value == "avx2") {
      if (!cpu_has_avx2())
        fail(ErrorCode::InvalidArgument, "CSM_KERNELS=avx2 but CPU lacks AVX2");
      backend = Backend::Avx2;
    } else if (!value.empty()) {
      fail(ErrorCode::InvalidArgument, "unknown CSM_KERNELS value: " + value);
    }
  }
  return backend;
}

Backend& backend_state() {
  static Backend backend = initial_backend();
  return backend;
}

}  // namespace

Backend active_backend() { return backend_state(); }

bool backend_supported(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return cpu_has_avx2();
  }
  return false;
}

void set_backend(Backend backend) {
  if (!backend_supported(backend))
    fail(ErrorCode::InvalidArgument,
         std::string("kernel backend not supported here: ") + backend_name(backend));
  backend_state() = backend;
}

const char* backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "?";
}

PackedRows pack_rows(const Matrix& x, const std::vector<int>& row_indices) {
  PackedRows packed;
  packed.rows = row_indices.size();
  packed.cols = x.cols();
  packed.data.assign(packed.blocks() * packed.cols * kLanes, 0.0);
  for (std::size_t r = 0; r < packed.rows; ++r) {
    const std::size_t block = r / kLanes;
    const std::size_t lane = r % kLanes;
    const auto row = x.row(static_cast<std::size_t>(row_indices[r]));
    for (std::size_t k = 0; k < packed.cols; ++k) {
      packed.data[(block * packed.cols + k) * kLanes + lane] = row[k];
    }
  }
  return packed;
}

// Reference kernel. The AVX2 variant performs the identical per-covariate
// operation sequence in each lane, so results match bit-for-bit.
void distance_rows_scalar(const double* query, const PackedRows& packed,
                          const double* v_diag, Norm norm, double* out) {
  const std::size_t p = packed.cols;
  const std::size_t blocks = packed.blocks();
  for (std::size_t b = 0; b < blocks; ++b) {
    const double* block = packed.data.data() + b * p * kLanes;
    const std::size_t base = b * kLanes;
    const std::size_t valid =
        packed.rows - base < kLanes ? packed.rows - base : kLanes;
    for (std::size_t lane = 0; lane < valid; ++lane) {
      double acc = 0.0;
      if (norm == Norm::L2) {
        for (std::size_t k = 0; k < p; ++k) {
          const double diff = query[k] - block[k * kLanes + lane];
          const double scaled = diff * v_diag[k];
          acc = acc + scaled * scaled;
        }
        out[base + lane] = std::sqrt(acc);
      } else {
        for (std::size_t k = 0; k < p; ++k) {
          const double diff = query[k] - block[k * kLanes + lane];
          const double scaled = std::fabs(diff * v_diag[k]);
          acc = scaled > acc ? scaled : acc;
        }
        out[base + lane] = acc;
      }
    }
  }
}

void distance_rows(const double* query, const PackedRows& packed,
                   const double* v_diag, Norm norm, double* out) {
#if defined(CSM_HAVE_AVX2)
  if (backend_state() == Backend::Avx2) {
    distance_rows_avx2(query, packed, v_diag, norm, out);
    return;
  }
#endif
  distance_rows_scalar(query, packed, v_diag, norm, out);
}

}  // namespace csm::kernels
