#include <doctest.h>

#include <cmath>
#include <omp.h>

#include "ibw/kernels.hpp"
#include "ibw/rng.hpp"

using namespace ibw;
using namespace ibw::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("parallel gemm matches serial for every transpose combination") {
  Rng rng(17);
  for (auto ta : {Trans::No, Trans::Yes})
    for (auto tb : {Trans::No, Trans::Yes})
      for (bool acc : {false, true}) {
        const GemmArgs args{ta, tb, 37, 530, 141, acc};
        const auto a = random_vec(rng, args.m * args.k);
        const auto b = random_vec(rng, args.k * args.n);
        auto c0 = random_vec(rng, args.m * args.n);
        auto c1 = c0;
        serial::gemm(args, a, b, c0);
        parallel::gemm(args, a, b, c1);
        for (std::size_t i = 0; i < c0.size(); ++i) REQUIRE(std::fabs(c0[i] - c1[i]) <= 1e-12 * (1 + std::fabs(c0[i])));
      }
}

TEST_CASE("parallel gemm is independent of thread count") {
  Rng rng(18);
  const GemmArgs args{Trans::No, Trans::Yes, 64, 256, 300, false};
  const auto a = random_vec(rng, args.m * args.k);
  const auto b = random_vec(rng, args.k * args.n);
  std::vector<double> c1(args.m * args.n), c4(args.m * args.n);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  parallel::gemm(args, a, b, c1);
  omp_set_num_threads(4);
  parallel::gemm(args, a, b, c4);
  omp_set_num_threads(saved);
  CHECK(c1 == c4);
}

TEST_CASE("column sums agree") {
  Rng rng(19);
  const auto a = random_vec(rng, 300 * 50);
  std::vector<double> s0(50), s1(50);
  serial::column_sums(300, 50, a, s0);
  parallel::column_sums(300, 50, a, s1);
  CHECK(s0 == s1);
}
