#include <doctest.h>

#include <cmath>

#include "ibw/errors.hpp"
#include "ibw/info.hpp"

using namespace ibw;
using namespace ibw::info;

TEST_CASE("duality closed form on w = (1, 1), alpha = ln 2") {
  Rng rng(1);
  const Tensor x = sample_standard_normal(rng, {1000000, 2});
  const Tensor w = Tensor::matrix({{1, 1}});
  const std::vector<double> a{std::log(2.0)};
  const auto cf = duality_closed_form(w, a, x);
  // -1/2 (E log chi2_2 - ln 4), E log chi2_2 = ln 2 + digamma(1)
  const double exact = -0.5 * (std::log(2.0) - 0.5772156649015329 - std::log(4.0));
  CHECK(exact == doctest::Approx(0.635182).epsilon(1e-6));
  CHECK(std::fabs(cf.value - exact) <= 3 * cf.std_error);

  Rng mrng(2);
  const Tensor xs = x.slice_rows(0, 200000);
  const auto cf_s = duality_closed_form(w, a, xs);
  const auto mc = mc_mi_gaussian(w, a, xs, mrng);
  CHECK(std::fabs(cf_s.value - mc.value) <= 3 * std::hypot(cf_s.std_error, mc.std_error));
  CHECK(mc.value >= 0.0);
}

TEST_CASE("duality closed form decreases in alpha and vanishes for large alpha") {
  Rng rng(3);
  const Tensor x = sample_standard_normal(rng, {5000, 8});
  const Tensor w = sample_standard_normal(rng, {3, 8});
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {0.1, 0.5, 1.0}) {
    const auto v = duality_closed_form(w, std::vector<double>(3, a), x).value;
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("pure-noise limit") {
  // As alpha grows the identity tends to -1/2 E log(q / E q), q = sum_j w_j^2 x_j^2,
  // which is zero up to a Jensen gap of order 1/dim(x).
  Rng rng(8);
  const Tensor w = Tensor::matrix({{1, 1}});
  const Tensor x2 = sample_standard_normal(rng, {200000, 2});
  const double gamma_half = 0.5 * 0.5772156649015329;
  CHECK(duality_closed_form(w, std::vector<double>{40.0}, x2).value == doctest::Approx(gamma_half).epsilon(0.01));

  const Tensor x = sample_standard_normal(rng, {4000, 512});
  const Tensor wide = sample_standard_normal(rng, {3, 512});
  const double lim = duality_closed_form(wide, std::vector<double>(3, 40.0), x).value;
  CHECK(lim > 0.0);
  CHECK(lim < 0.03);
  CHECK(duality_closed_form(wide, std::vector<double>(3, 2.0), x).value > lim);
}

TEST_CASE("monte carlo oracle diverges as the noise vanishes") {
  Rng rng(4);
  const Tensor x = sample_standard_normal(rng, {2000, 4});
  const Tensor w = sample_standard_normal(rng, {1, 4});
  Rng r1(5), r2(5);
  const double small = mc_mi_gaussian(w, std::vector<double>{1e-6}, x, r1).value;
  const double big = mc_mi_gaussian(w, std::vector<double>{1e-2}, x, r2).value;
  CHECK(small > big + 2.0);
}

TEST_CASE("duality errors") {
  const Tensor w = Tensor::matrix({{1, 1}});
  CHECK_THROWS_AS(duality_closed_form(w, std::vector<double>{1.0}, Tensor({5, 2})), DomainError);
  CHECK_THROWS_AS(duality_closed_form(w, std::vector<double>{1.0}, Tensor({1, 2}, 1.0)), DomainError);
  CHECK_THROWS_AS(duality_closed_form(w, std::vector<double>{1.0}, Tensor({4, 3}, 1.0)), DimensionError);
  CHECK_THROWS_AS(duality_closed_form(w, std::vector<double>{0.0}, Tensor({4, 2}, 1.0)), DomainError);
}

TEST_CASE("tightness and oracle agreement for zero-mean inputs") {
  Rng rng(6);
  const std::size_t n = 20000, dx = 512, dz = 4;
  const Tensor x = sample_standard_normal(rng, {n, dx});
  Tensor w = sample_standard_normal(rng, {dz, dx});
  for (double a : {0.1, 0.5, 1.0}) {
    const std::vector<double> alphas(dz, a);
    const auto cf = duality_closed_form(w, alphas, x);
    Rng mr(7);
    const auto mc = mc_mi_gaussian(w, alphas, x, mr);
    CHECK(std::fabs(cf.value - mc.value) <= 3 * std::hypot(cf.std_error, mc.std_error));
    const double per = cf.value / dz;
    CHECK(per >= bound_fn(a));
    CHECK(per <= bound_fn(a) + 0.05 + 3 * cf.std_error / dz);
  }
}
