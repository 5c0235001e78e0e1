#pragma once

// Matrix kernels used by the dense layers. Two implementations share one
// signature: `serial` is the straightforward reference kept for tests and the
// benchmark; `parallel` is the blocked OpenMP version used everywhere else.
//
// Both accumulate every output element over the inner index in increasing
// order, and `parallel` gives each output row to exactly one thread, so its
// results do not depend on the thread count.

#include <cstddef>
#include <span>

namespace ibw::kernels {

enum class Trans { No, Yes };

// C = op(A) * op(B)            (accumulate == false)
// C = C + op(A) * op(B)        (accumulate == true)
// op(A) is m x k, op(B) is k x n, C is m x n, all row-major. With Trans::Yes
// the stored matrix is the transpose (A stored k x m, B stored n x k).
struct GemmArgs {
  Trans trans_a = Trans::No;
  Trans trans_b = Trans::No;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  bool accumulate = false;
};

namespace serial {
void gemm(const GemmArgs& args, std::span<const double> a, std::span<const double> b,
          std::span<double> c);
// Column sums of an m x n matrix into out[n] (out is overwritten).
void column_sums(std::size_t m, std::size_t n, std::span<const double> a, std::span<double> out);
}  // namespace serial

namespace parallel {
void gemm(const GemmArgs& args, std::span<const double> a, std::span<const double> b,
          std::span<double> c);
void column_sums(std::size_t m, std::size_t n, std::span<const double> a, std::span<double> out);
}  // namespace parallel

// Number of threads the parallel kernels will use at the top level.
int max_threads();

}  // namespace ibw::kernels
