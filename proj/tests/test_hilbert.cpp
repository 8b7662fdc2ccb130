#include <doctest.h>

#include <cmath>

#include "kprod/contraction.hpp"
#include "kprod/hilbert.hpp"
#include "oracles.hpp"

using namespace kprod;

TEST_SUITE("hilbert") {

TEST_CASE("uniform positivity certificate") {
  const auto ones = is_uniformly_positive(Kernel::ones(2));
  CHECK(ones.flag);
  CHECK(ones.K == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ones.sandwich_ok);

  const auto les = is_uniformly_positive(Kernel::leslie({1, 1, 1}, {0.5, 0.5, 0}));
  CHECK_FALSE(les.flag);
  CHECK(std::isinf(les.K));

  Engine g(2);
  std::vector<Kernel> cases = {Kernel::dense({{2, 1}, {1, 2}})};
  for (int i = 0; i < 30; ++i) cases.push_back(oracle::random_kernel(2 + i % 5, g));
  for (const Kernel& q : cases) {
    const auto c = is_uniformly_positive(q);
    REQUIRE(c.flag);
    CHECK(c.sandwich_ok);
    const std::size_t p = q.size();
    for (std::size_t y = 0; y < p; ++y) {
      double lo = INFINITY, hi = 0.0;
      for (std::size_t x = 0; x < p; ++x) {
        const double r = q(x, y) / c.h[x];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      const double b = std::sqrt(lo * hi);
      for (std::size_t x = 0; x < p; ++x) {
        CHECK(q(x, y) >= b * c.h[x] / c.K * (1 - 1e-12));
        CHECK(q(x, y) <= b * c.h[x] * c.K * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("Hennion bound") {
  const Kernel equal_rows = Kernel::dense({{1, 2}, {1, 2}});
  CHECK(hennion_d_bound(ProductWindow({equal_rows, equal_rows, equal_rows}, 0), 2) == 1.0);

  const Kernel les = Kernel::leslie({1, 1, 1, 1}, {0.5, 0.5, 0.5, 0});
  CHECK(hennion_d_bound(ProductWindow(std::vector<Kernel>(4, les), 0), 3) == 0.0);

  Engine g(9);
  for (int t = 0; t < 200; ++t) {
    const auto ks = random_window(4, 8, g);
    const ProductWindow future(ks, 1);
    const double bound = hennion_d_bound(future, 3);
    const Measure nu = random_measure(4, g);
    for (std::size_t n = 3; n <= 9; ++n) {
      CHECK(bound <= d_horizon(nu, future, 1, n, 3).d + 1e-12);
    }
  }
}

TEST_CASE("Hilbert distance and Birkhoff coefficient") {
  CHECK(hilbert_distance(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK(hilbert_distance(std::vector<double>{1, 2}, std::vector<double>{2, 1}) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(hilbert_distance(std::vector<double>{1, 2}, std::vector<double>{3, 6}) == doctest::Approx(0.0));
  CHECK(std::isinf(hilbert_distance(std::vector<double>{0, 1}, std::vector<double>{1, 1})));

  CHECK(birkhoff_coefficient(Kernel::ones(3)) == 0.0);
  CHECK(birkhoff_coefficient(Kernel::identity(2)) == 1.0);
  // phi = 1/4 for [[2,1],[1,2]], so tau = (1 - 1/2) / (1 + 1/2).
  CHECK(birkhoff_coefficient(Kernel::dense({{2, 1}, {1, 2}})) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Engine g(4);
  for (int t = 0; t < 200; ++t) {
    const Kernel q = oracle::random_kernel(2 + t % 5, g);
    const double tau = birkhoff_coefficient(q);
    CHECK(tau < 1.0);
    for (int i = 0; i < 10; ++i) {
      const Measure u = random_measure(q.size(), g), v = random_measure(q.size(), g);
      const double before = hilbert_distance(u, v);
      const double after = hilbert_distance(act_left(u, q), act_left(v, q));
      CHECK(after <= (tau + 1e-9) * before);
    }
  }
}

TEST_CASE("Dobrushin coefficient") {
  CHECK(dobrushin_coefficient({1, 0, 0, 1}, 2) == 1.0);
  CHECK(dobrushin_coefficient({0.3, 0.7, 0.3, 0.7}, 2) == 0.0);
  CHECK(dobrushin_coefficient({0.5, 0.5, 0, 0.1, 0.9, 0, 0.2, 0.3, 0.5}, 3) == doctest::Approx(0.6));
}

TEST_CASE("discretized population kernel") {
  const auto flat = discretize_kernel_example(16, [](double) { return 1.0; },
                                              [](double, double) { return 1.0; });
  CHECK(flat.K == 1.0);
  CHECK(flat.triplet.c == 1.0);
  CHECK(flat.triplet.d == 1.0);
  CHECK(flat.certificate_ok);

  auto q = [](double x, double y) { return 1.0 + x * y; };
  auto one = [](double) { return 1.0; };
  const auto e64 = discretize_kernel_example(64, one, q);
  double qmin = INFINITY, qmax = 0.0;
  for (std::size_t i = 0; i < 64; ++i) {
    const double x = (i + 0.5) / 64;
    double z = 0.0;
    for (std::size_t j = 0; j < 64; ++j) z += q(x, (j + 0.5) / 64) / 64;
    for (std::size_t j = 0; j < 64; ++j) {
      const double v = q(x, (j + 0.5) / 64) / z;
      qmin = std::min(qmin, v);
      qmax = std::max(qmax, v);
    }
  }
  CHECK(e64.K == doctest::Approx(std::max(1.0 / qmin, qmax)).epsilon(1e-12));
  CHECK(e64.triplet.c == doctest::Approx(1.0 / e64.K).epsilon(1e-12));
  CHECK(e64.certificate_ok);
  CHECK(e64.triplet.c <= e64.certified_c + 1e-12);
  CHECK(e64.triplet.d <= e64.certified_d + 1e-12);
  for (std::size_t x = 0; x < 64; ++x) CHECK(e64.kernel.row_sum(x) == doctest::Approx(1.0).epsilon(1e-12));

  const auto e32 = discretize_kernel_example(32, one, q);
  CHECK(std::abs(e32.triplet.c - e64.triplet.c) <= 0.05);
  CHECK(std::abs(e32.triplet.d - e64.triplet.d) <= 0.05);

  const auto varm = discretize_kernel_example(32, [](double x) { return 1.0 + x; }, q);
  CHECK(varm.certificate_ok);

  CHECK_THROWS_AS(discretize_kernel_example(8, one, [](double x, double y) { return x - y; }), InvalidInput);
}

TEST_CASE("Leslie products are never uniformly positive before mixing") {
  for (std::size_t p = 2; p <= 12; ++p) {
    const Kernel les = Kernel::leslie(std::vector<double>(p, 1.0), std::vector<double>(p, 0.5));
    for (std::size_t n = 1; n <= 10; ++n) {
      const auto r = leslie_pattern(std::vector<Kernel>(n, les));
      CHECK(r.matches_prediction);
      if (n < p) CHECK_FALSE(r.uniformly_positive);
      if (n < p) CHECK(r.zero_entries > 0);
    }
  }
}

TEST_CASE("comparison table") {
  ComparisonOptions opt;
  opt.instances = 40;
  opt.seed = 5;
  const auto rows = hilbert_comparison(opt);
  REQUIRE(rows.size() == 40);
  for (const auto& r : rows) {
    CHECK(r.tv_ok);
    CHECK(r.hilbert_ok);
    CHECK(r.hennion_ok);
    CHECK(r.one_minus_gamma == doctest::Approx(1.0 - r.gamma));
    CHECK(r.observed_tv_factor <= r.one_minus_gamma + 1e-9);
    CHECK(r.observed_hilbert_factor <= r.tau_birkhoff + 1e-9);
  }
  opt.threads = 3;
  const auto again = hilbert_comparison(opt);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].gamma == rows[i].gamma);
    CHECK(again[i].observed_hilbert_factor == rows[i].observed_hilbert_factor);
  }
}

}
