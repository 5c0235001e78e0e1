#include "ibw/kernels.hpp"

#include <cassert>

namespace ibw::kernels::serial {

namespace {

inline double load_a(const GemmArgs& g, std::span<const double> a, std::size_t i, std::size_t p) {
  return g.trans_a == Trans::No ? a[i * g.k + p] : a[p * g.m + i];
}

inline double load_b(const GemmArgs& g, std::span<const double> b, std::size_t p, std::size_t j) {
  return g.trans_b == Trans::No ? b[p * g.n + j] : b[j * g.k + p];
}

}  // namespace

void gemm(const GemmArgs& g, std::span<const double> a, std::span<const double> b,
          std::span<double> c) {
  assert(a.size() >= g.m * g.k && b.size() >= g.k * g.n && c.size() >= g.m * g.n);
  for (std::size_t i = 0; i < g.m; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      double acc = g.accumulate ? c[i * g.n + j] : 0.0;
      for (std::size_t p = 0; p < g.k; ++p) acc += load_a(g, a, i, p) * load_b(g, b, p, j);
      c[i * g.n + j] = acc;
    }
  }
}

void column_sums(std::size_t m, std::size_t n, std::span<const double> a, std::span<double> out) {
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += a[i * n + j];
    out[j] = acc;
  }
}

}  // namespace ibw::kernels::serial
