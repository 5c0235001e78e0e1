#include "ibw/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ibw::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

namespace {

constexpr std::size_t kBlockK = 128;
constexpr std::size_t kBlockN = 512;
// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 15;

// rows x cols row-major -> cols x rows row-major
std::vector<double> transposed(std::span<const double> src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  constexpr std::size_t tile = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += tile) {
    const std::size_t r1 = std::min(rows, r0 + tile);
    for (std::size_t c0 = 0; c0 < cols; c0 += tile) {
      const std::size_t c1 = std::min(cols, c0 + tile);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) out[c * rows + r] = src[r * cols + c];
    }
  }
  return out;
}

// C[i, :] (+)= A[i, :] * B for one row, blocked over k and n. The inner index
// p still advances monotonically for every output element.
inline void row_kernel(const double* a_row, const double* b, double* c_row, std::size_t n,
                       std::size_t k) {
  for (std::size_t j0 = 0; j0 < n; j0 += kBlockN) {
    const std::size_t j1 = std::min(n, j0 + kBlockN);
    for (std::size_t p0 = 0; p0 < k; p0 += kBlockK) {
      const std::size_t p1 = std::min(k, p0 + kBlockK);
      for (std::size_t p = p0; p < p1; ++p) {
        const double av = a_row[p];
        if (av == 0.0) continue;
        const double* b_row = b + p * n;
#pragma omp simd
        for (std::size_t j = j0; j < j1; ++j) c_row[j] += av * b_row[j];
      }
    }
  }
}

}  // namespace

void gemm(const GemmArgs& g, std::span<const double> a, std::span<const double> b,
          std::span<double> c) {
  assert(a.size() >= g.m * g.k && b.size() >= g.k * g.n && c.size() >= g.m * g.n);
  if (g.m == 0 || g.n == 0) return;

  std::vector<double> a_buf;
  std::vector<double> b_buf;
  const double* a_ptr = a.data();
  const double* b_ptr = b.data();
  if (g.trans_a == Trans::Yes) {
    a_buf = transposed(a, g.k, g.m);
    a_ptr = a_buf.data();
  }
  if (g.trans_b == Trans::Yes) {
    b_buf = transposed(b, g.n, g.k);
    b_ptr = b_buf.data();
  }

  const std::size_t m = g.m;
  const std::size_t n = g.n;
  const std::size_t k = g.k;
  double* c_ptr = c.data();
  const bool accumulate = g.accumulate;
  const bool go_parallel = m > 1 && m * n * k >= kParallelThreshold;

#pragma omp parallel for schedule(static) if (go_parallel)
  for (std::size_t i = 0; i < m; ++i) {
    double* c_row = c_ptr + i * n;
    if (!accumulate) std::fill(c_row, c_row + n, 0.0);
    row_kernel(a_ptr + i * k, b_ptr, c_row, n, k);
  }
}

void column_sums(std::size_t m, std::size_t n, std::span<const double> a, std::span<double> out) {
  const bool go_parallel = n > 64 && m * n >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (go_parallel)
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += a[i * n + j];
    out[j] = acc;
  }
}

}  // namespace parallel
}  // namespace ibw::kernels
