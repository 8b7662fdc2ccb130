#include <doctest.h>

#include <cmath>
#include <limits>

#include "kprod/asymptotics.hpp"
#include "kprod/doeblin.hpp"
#include "kprod/leslie.hpp"
#include "oracles.hpp"

using namespace kprod;

namespace {

// min over x, y in supp(nu) of M(x,y) / (m(x) nu(y)), by enumeration.
double brute_c(const Kernel& m, const Measure& nu) {
  double c = 1.0;
  for (std::size_t x = 0; x < m.size(); ++x) {
    for (std::size_t y = 0; y < m.size(); ++y) {
      if (nu[y] > 0) c = std::min(c, m(x, y) / (m.row_sum(x) * nu[y]));
    }
  }
  return c;
}

}  // namespace

TEST_SUITE("doeblin") {

TEST_CASE("max_c examples") {
  CHECK(max_c(Kernel::ones(2), Measure::uniform(2)) == 1.0);
  CHECK(max_c(Kernel::identity(2), Measure::uniform(2)) == 0.0);
  const Kernel l = Kernel::leslie({1, 1, 1}, {0.5, 0.5, 0});
  const double c = max_c(l, Measure::dirac(3, 0));
  CHECK(c == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c == doctest::Approx(brute_c(l, Measure::dirac(3, 0))).epsilon(1e-15));
  CHECK(c == doctest::Approx(leslie_c(l)).epsilon(1e-15));
  CHECK_THROWS_AS(max_c(Kernel::dense({{1, 1}, {0, 0}}), Measure::uniform(2)), AssumptionViolation);
}

TEST_CASE("max_c is the largest admissible c") {
  Engine g(10);
  for (int t = 0; t < 100; ++t) {
    const std::size_t p = 2 + t % 5;
    const Kernel m = oracle::random_kernel(p, g, 0.0, 2.0);
    Measure nu(p);
    for (std::size_t y = 0; y < p; ++y) nu[y] = uniform01(g);
    nu = nu.normalized();
    const double c = max_c(m, nu);
    CHECK(c == doctest::Approx(std::min(1.0, brute_c(m, nu))).epsilon(1e-12));
    for (std::size_t x = 0; x < p; ++x) {
      for (std::size_t y = 0; y < p; ++y) CHECK(m(x, y) >= c * m.row_sum(x) * nu[y] - 1e-12);
    }
  }
}

TEST_CASE("d_horizon examples") {
  const auto ones = EnvironmentSpec::constant(Kernel::ones(2));
  for (std::size_t n : {1, 2, 10, 40}) {
    CHECK(d_horizon(Measure::uniform(2), EnvironmentStream(ones), n).d == doctest::Approx(1.0));
  }
  const Kernel m = Kernel::dense({{2, 1}, {1, 1}});
  const auto h = oracle::perron_right(oracle::dense(m));
  const double expect = 0.5 * (h[0] + h[1]) / std::max(h[0], h[1]);
  CHECK(expect == doctest::Approx(0.8090).epsilon(1e-4));
  const auto r = d_horizon(Measure::uniform(2), EnvironmentStream(EnvironmentSpec::constant(m)), 50);
  CHECK(r.horizon == 50);
  CHECK(std::abs(r.d - expect) <= 1e-9);
}

TEST_CASE("d_horizon on the squared-block Leslie kernel decays") {
  const Counterexample ce = build_counterexample(9.0, 0.1, squared_blocks(3200));
  const auto spec = EnvironmentSpec::constant(ce.kernel);
  const Measure d0 = Measure::dirac(ce.K, 0);
  const double d20 = d_horizon(d0, EnvironmentStream(spec), 20).d;
  const double d21 = d_horizon(d0, EnvironmentStream(spec), 21).d;
  const double d60 = d_horizon(d0, EnvironmentStream(spec), 60).d;
  CHECK(d60 < 1e-3);
  CHECK(d21 < d20);
  // With K = 3200 the longest run of marks is 20, so the decay stops there.
  CHECK(d60 == doctest::Approx(d21).epsilon(1e-12));

  // Long enough to hold a run of 60 marks: still decreasing at N_max = 60.
  const Counterexample big = build_counterexample(9.0, 0.1, squared_blocks(squared_blocks_length(60)));
  const auto big_spec = EnvironmentSpec::constant(big.kernel);
  const Measure b0 = Measure::dirac(big.K, 0);
  const double b40 = d_horizon(b0, EnvironmentStream(big_spec), 40).d;
  const double b60 = d_horizon(b0, EnvironmentStream(big_spec), 60).d;
  CHECK(b60 < b40);
}

TEST_CASE("triplet_at certifies both inequalities") {
  Engine g(11);
  for (int t = 0; t < 50; ++t) {
    const std::size_t p = 2 + t % 4;
    std::vector<Kernel> ks;
    for (int i = 0; i < 7; ++i) ks.push_back(oracle::random_kernel(p, g, 0.0, 2.0));
    const ProductWindow w(ks, 0);
    const AdmissibleTriplet tr = triplet_at(w, 0);
    CHECK(tr.gamma == doctest::Approx(tr.c * tr.d));
    CHECK(tr.provenance == Provenance::horizon_bounded);
    for (std::size_t x = 0; x < p; ++x) {
      for (std::size_t y = 0; y < p; ++y) {
        CHECK(ks[0](x, y) >= tr.c * ks[0].row_sum(x) * tr.nu[y] - 1e-12);
      }
    }
    oracle::Mat prod(p, oracle::Vec(p, 0.0));
    for (std::size_t i = 0; i < p; ++i) prod[i][i] = 1.0;
    for (std::size_t n = 1; n <= tr.horizon; ++n) {
      const oracle::Vec m = oracle::times_col(prod, oracle::Vec(p, 1.0));
      double num = 0.0, sup = 0.0;
      for (std::size_t x = 0; x < p; ++x) {
        num += tr.nu[x] * m[x];
        sup = std::max(sup, m[x]);
      }
      CHECK(num >= tr.d * sup * (1 - 1e-12));
      if (n < tr.horizon) prod = oracle::matmul(prod, oracle::dense(ks[n]));
    }
  }
}

TEST_CASE("gamma_bar") {
  const std::vector<double> half(10, 0.5);
  CHECK(gamma_bar(half) == doctest::Approx(0.5));
  const std::vector<double> mix = {0.0, 0.5, 0.0, 0.5};
  CHECK(gamma_bar(mix) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  const std::vector<double> one = {1.0, 1.0};
  CHECK(gamma_bar(one) == 0.0);
}

TEST_CASE("tau_eps") {
  const std::vector<double> g = {0.5, 0.0, 0.2};
  CHECK(tau_eps(g, 3, 0.3) == std::optional<std::size_t>(1));
  CHECK(tau_eps(g, 3, 0.1) == std::optional<std::size_t>(3));
  CHECK_FALSE(tau_eps(g, 3, 0.6).has_value());
}

TEST_CASE("Gamma") {
  const std::vector<double> half(10, 0.5);
  CHECK(Gamma(0, 3, half) == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<double> z = {0.5, 0.5, 0.0};
  CHECK(Gamma(0, 3, z) == std::numeric_limits<double>::infinity());
  Engine g(12);
  std::vector<double> r(30);
  for (double& v : r) v = 0.05 + 0.9 * uniform01(g);
  for (std::size_t k = 0; k < 10; ++k) {
    for (std::size_t n = k + 1; n <= 30; ++n) {
      double prod = 1.0;
      for (std::size_t i = k; i < n; ++i) prod *= 1.0 - r[i];
      CHECK(oracle::rel_err(Gamma(k, n, r), prod / r[n - 1]) <= 1e-14);
    }
  }
}

TEST_CASE("Delta") {
  const std::vector<double> half(200, 0.5);
  REQUIRE(Delta(0, 3, 0.1, half).has_value());
  CHECK(*Delta(0, 3, 0.1, half) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_FALSE(Delta(0, 2, 0.1, half).has_value());
  std::vector<double> n, logd;
  for (std::size_t m = 5; m <= 150; ++m) {
    const auto d = Delta(0, m, 0.1, half);
    REQUIRE(d.has_value());
    n.push_back(static_cast<double>(m));
    logd.push_back(std::log(*d));
  }
  CHECK(fitted_geometric_rate(n, logd) <= 0.5 + 0.05);
}

}
