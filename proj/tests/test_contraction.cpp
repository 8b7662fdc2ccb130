#include <doctest.h>

#include <cmath>

#include "kprod/contraction.hpp"
#include "oracles.hpp"

using namespace kprod;

namespace {

std::vector<Kernel> random_kernels(std::size_t p, std::size_t n, Engine& g) {
  std::vector<Kernel> ks;
  for (std::size_t i = 0; i < n; ++i) ks.push_back(oracle::random_kernel(p, g));
  return ks;
}

}  // namespace

TEST_SUITE("contraction") {

TEST_CASE("aux_P on ones kernels is uniform") {
  const ProductWindow w(std::vector<Kernel>(5, Kernel::ones(2)), 0);
  for (auto [k, n, N] : {std::tuple{0, 1, 5}, {1, 3, 4}, {2, 3, 5}, {0, 5, 5}}) {
    const auto P = aux_P(w, k, n, N);
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t y = 0; y < 2; ++y) CHECK(P(x, y) == doctest::Approx(0.5).epsilon(1e-15));
    }
  }
}

TEST_CASE("aux_P with n = N is the normalized product") {
  Engine g(20);
  const auto ks = random_kernels(4, 5, g);
  const ProductWindow w(ks, 0);
  const auto P = aux_P(w, 1, 4, 4);
  const oracle::Mat ref = oracle::matmul(oracle::matmul(oracle::dense(ks[1]), oracle::dense(ks[2])),
                                         oracle::dense(ks[3]));
  for (std::size_t x = 0; x < 4; ++x) {
    double row = 0.0;
    for (double v : ref[x]) row += v;
    for (std::size_t y = 0; y < 4; ++y) CHECK(oracle::rel_err(P(x, y), ref[x][y] / row) <= 1e-12);
  }
}

TEST_CASE("aux_P is stochastic and factorizes") {
  Engine g(21);
  for (int t = 0; t < 50; ++t) {
    const auto ks = random_kernels(4, 3, g);
    const ProductWindow w(ks, 0);
    const auto whole = aux_P(w, 0, 2, 3);
    const auto split = aux_P(w, 0, 1, 3) * aux_P(w, 1, 2, 3);
    for (std::size_t x = 0; x < 4; ++x) {
      double row = 0.0;
      for (std::size_t y = 0; y < 4; ++y) {
        CHECK(std::abs(whole(x, y) - split(x, y)) <= 1e-12);
        row += whole(x, y);
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("Doeblin minoration: degenerate and total coupling") {
  Engine g(22);
  const ProductWindow w(random_kernels(3, 4, g), 0);
  AdmissibleTriplet zero = triplet_at(w, 1);
  zero.gamma = 0.0;
  CHECK(check_doeblin_minoration(w, 1, 4, zero).pass);

  const ProductWindow ones(std::vector<Kernel>(4, Kernel::ones(3)), 0);
  const AdmissibleTriplet t = triplet_at(ones, 1, Measure::uniform(3));
  CHECK(t.gamma == doctest::Approx(1.0));
  const auto r = check_doeblin_minoration(ones, 1, 4, t);
  CHECK(r.pass);
  CHECK(std::abs(r.slack) <= 1e-15);
}

TEST_CASE("projective contraction: equal starts and rank-one kernels") {
  Engine g(23);
  const ProductWindow w(random_kernels(3, 6, g), 0);
  const auto gammas = gamma_series(w, 0, 6);
  const Measure mu = random_measure(3, g);
  const auto same = projective_contraction_check(w, mu, mu, 1, 5, gammas);
  CHECK(same.lhs == 0.0);
  CHECK(same.pass);

  const Kernel rank_one = Kernel::dense({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  const ProductWindow r(std::vector<Kernel>(4, rank_one), 0);
  const auto g1 = gamma_series(r, 0, 4);
  CHECK(g1[0] == doctest::Approx(1.0));
  const auto rep = projective_contraction_check(r, Measure::dirac(3, 0), Measure::dirac(3, 2), 0, 1, g1);
  CHECK(rep.lhs <= 1e-15);
}

TEST_CASE("growth ratio: equal starts and vanishing coefficient") {
  Engine g(24);
  const ProductWindow w(random_kernels(3, 6, g), 0);
  auto gammas = gamma_series(w, 0, 6);
  const Measure mu = random_measure(3, g);
  CHECK(growth_ratio_check(w, mu, mu, 0, 3, 6, gammas).lhs == 0.0);
  gammas[2] = 0.0;
  const auto r = growth_ratio_check(w, mu, random_measure(3, g), 0, 3, 6, gammas);
  CHECK(r.lhs == 0.0);
  CHECK(r.pass);
}

TEST_CASE("sandwich: collapse at n = k + 1 and rank-one closed form") {
  Engine g(25);
  const ProductWindow w(random_kernels(3, 6, g), 0);
  const auto gammas = gamma_series(w, 0, 6);
  const Measure mu = random_measure(3, g);
  const auto s = sandwich_gamma_check(w, mu, 2, 3, gammas[2]);
  CHECK(s.pass);
  CHECK(s.log_upper == doctest::Approx(s.log_middle).epsilon(1e-14));

  const ProductWindow ones(std::vector<Kernel>(6, Kernel::ones(2)), 0);
  const auto o = sandwich_gamma_check(ones, Measure::uniform(2), 1, 5, 1.0);
  CHECK(o.log_middle == doctest::Approx(5 * std::log(2.0)).epsilon(1e-14));
  CHECK(o.log_upper == doctest::Approx(o.log_middle).epsilon(1e-14));
  CHECK(o.log_lower == doctest::Approx(o.log_middle).epsilon(1e-14));
}

TEST_CASE("TV contraction rejects measures with mass") {
  Engine g(26);
  const ProductWindow w(random_kernels(3, 4, g), 0);
  const auto gammas = gamma_series(w, 0, 4);
  CHECK_THROWS_AS(tv_contraction_check(w, Measure::dirac(3, 0), 0, 2, 4, gammas), InvalidInput);
}

TEST_CASE("inequality suite on random windows") {
  Engine g(27);
  std::size_t records = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t p = 1 + i % 6;
    const std::size_t N = 2 + i % 7;
    const ProductWindow w(random_window(p, N, g, 0.25), 0);
    for (const auto& r : inequality_suite(w, i, 2024)) {
      CHECK_MESSAGE(r.report.pass, r.report.check << " instance " << i);
      ++records;
    }
  }
  CHECK(records == 200 * 6);
}

}
