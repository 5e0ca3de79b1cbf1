#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "csm/kernels.hpp"
#include "csm/rng.hpp"

using namespace csm;
using namespace csm::kernels;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(-100.0, 100.0);
  return m;
}

std::vector<int> iota_rows(std::size_t n) {
  std::vector<int> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(i);
  return rows;
}

}  // namespace

TEST_CASE("packed layout places row r, column k at the documented slot") {
  Rng rng(1);
  const auto x = random_matrix(rng, 7, 3);
  const auto packed = pack_rows(x, iota_rows(7));
  CHECK(packed.rows == 7);
  CHECK(packed.cols == 3);
  CHECK(packed.blocks() == 2);
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(packed.data[((r / kLanes) * 3 + k) * kLanes + (r % kLanes)] == x(r, k));
  // padding lanes are zero
  CHECK(packed.data[(1 * 3 + 0) * kLanes + 3] == 0.0);
}

TEST_CASE("pack_rows honors a row-index subset") {
  Rng rng(2);
  const auto x = random_matrix(rng, 6, 2);
  const auto packed = pack_rows(x, {4, 1});
  CHECK(packed.rows == 2);
  CHECK(packed.data[(0 * 2 + 0) * kLanes + 0] == x(4, 0));
  CHECK(packed.data[(0 * 2 + 1) * kLanes + 1] == x(1, 1));
}

#if defined(CSM_HAVE_AVX2)
TEST_CASE("AVX2 kernel matches the scalar reference bit-for-bit") {
  if (!backend_supported(Backend::Avx2)) return;  // non-AVX2 host
  Rng rng(3);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t m = 1 + rng.below(70);
    const std::size_t p = 1 + rng.below(9);
    const auto x = random_matrix(rng, m + 1, p);
    const auto packed = pack_rows(x, iota_rows(m));
    std::vector<double> v(p), query(p);
    for (auto& vi : v) vi = rng.uniform(0.05, 10.0);
    for (auto& qi : query) qi = rng.uniform(-100.0, 100.0);

    for (Norm norm : {Norm::L2, Norm::Linf}) {
      std::vector<double> out_scalar(m, -1.0), out_avx2(m, -2.0);
      distance_rows_scalar(query.data(), packed, v.data(), norm, out_scalar.data());
      distance_rows_avx2(query.data(), packed, v.data(), norm, out_avx2.data());
      CHECK(out_scalar == out_avx2);  // exact bit equality expected
    }
  }
}

TEST_CASE("backend can be forced at runtime") {
  if (!backend_supported(Backend::Avx2)) return;
  const Backend before = active_backend();
  set_backend(Backend::Scalar);
  CHECK(active_backend() == Backend::Scalar);
  set_backend(Backend::Avx2);
  CHECK(active_backend() == Backend::Avx2);
  set_backend(before);
}
#endif

TEST_CASE("dispatched entry point agrees with the scalar reference") {
  Rng rng(4);
  const std::size_t m = 37, p = 4;
  const auto x = random_matrix(rng, m, p);
  const auto packed = pack_rows(x, iota_rows(m));
  std::vector<double> v(p, 1.0), query(p, 0.5);
  for (Norm norm : {Norm::L2, Norm::Linf}) {
    std::vector<double> a(m), b(m);
    distance_rows(query.data(), packed, v.data(), norm, a.data());
    distance_rows_scalar(query.data(), packed, v.data(), norm, b.data());
    CHECK(a == b);
  }
}

TEST_CASE("backend names") {
  CHECK(std::string(backend_name(Backend::Scalar)) == "scalar");
  CHECK(std::string(backend_name(Backend::Avx2)) == "avx2");
  CHECK(backend_supported(Backend::Scalar));
}
