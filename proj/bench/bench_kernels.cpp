// Serial reference vs OpenMP kernels, plus one training epoch.
// usage: bench_kernels [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "ibw/data.hpp"
#include "ibw/kernels.hpp"
#include "ibw/rng.hpp"
#include "ibw/vnn.hpp"

using namespace ibw;
using clock_type = std::chrono::steady_clock;

namespace {

template <typename F>
double best_seconds(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = clock_type::now();
    f();
    best = std::min(best, std::chrono::duration<double>(clock_type::now() - t0).count());
  }
  return best;
}

void bench_gemm(const char* label, kernels::GemmArgs args, int repeats) {
  Rng rng(1);
  std::vector<double> a(args.m * args.k), b(args.k * args.n), c(args.m * args.n);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  const double flops = 2.0 * static_cast<double>(args.m * args.n * args.k);
  const double ts = best_seconds(repeats, [&] { kernels::serial::gemm(args, a, b, c); });
  const double tp = best_seconds(repeats, [&] { kernels::parallel::gemm(args, a, b, c); });
  std::printf("%-28s serial %8.3f ms %6.2f GF/s | parallel %8.3f ms %6.2f GF/s | x%.1f\n", label, ts * 1e3,
              flops / ts * 1e-9, tp * 1e3, flops / tp * 1e-9, ts / tp);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  std::printf("threads: %d\n", kernels::max_threads());
  using kernels::Trans;
  bench_gemm("forward  128x784 * 784x128", {Trans::No, Trans::Yes, 128, 128, 784, false}, repeats);
  bench_gemm("backward dW 128x128x128", {Trans::Yes, Trans::No, 128, 784, 128, false}, repeats);
  bench_gemm("backward dx 128x128x784", {Trans::No, Trans::No, 128, 784, 128, false}, repeats);
  bench_gemm("square 512", {Trans::No, Trans::No, 512, 512, 512, false}, repeats);

  Rng drng(2);
  const auto data = data::synthetic_gaussian_dataset(784, 2048, 10, 3.0, drng);
  Rng rng(3);
  const auto net = vnn::init_network(vnn::NetworkSpec::mlp({784, 128, 128, 10}), rng);
  vnn::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.beta = 0.1;
  const double t = best_seconds(1, [&] { vnn::train(net, data, cfg); });
  std::printf("train 784-128-128-10, N=2048: %.3f s/epoch\n", t / 3.0);
}
