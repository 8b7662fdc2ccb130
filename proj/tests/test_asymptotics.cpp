#include <doctest.h>

#include <cmath>

#include "kprod/asymptotics.hpp"
#include "kprod/rng.hpp"
#include "oracles.hpp"

using namespace kprod;

namespace {

const double kLog2 = std::log(2.0);
const double kLog3 = std::log(3.0);

EnvironmentSpec scalar_iid(std::uint64_t seed = 1) {
  return EnvironmentSpec::iid({Kernel::ones(2), Kernel::ones(2).scaled(2.0)}, {0.5, 0.5}, seed);
}

EnvironmentSpec three_state(std::uint64_t seed = 2) {
  return EnvironmentSpec::iid(
      {Kernel::dense({{2, 1, 0.5}, {1, 1, 1}, {0.3, 2, 1}}),
       Kernel::dense({{1, 0.2, 1}, {0.5, 3, 0.5}, {1, 1, 2}}),
       Kernel::dense({{0.7, 0.7, 0.7}, {1.5, 0.2, 0.4}, {0.9, 1.1, 1.3}})},
      {0.3, 0.3, 0.4}, seed);
}

}  // namespace

TEST_SUITE("asymptotics") {

TEST_CASE("estimate_h: ones kernel is exact at n = 1") {
  const auto h = estimate_h(EnvironmentStream(EnvironmentSpec::constant(Kernel::ones(2))), 0);
  CHECK(h.converged);
  CHECK(h.n_used == 1);
  CHECK(h.values[0] == 1.0);
  CHECK(h.values[1] == 1.0);
}

TEST_CASE("estimate_h matches right Perron vectors") {
  for (const Kernel& m : {Kernel::dense({{2, 1}, {1, 2}}), Kernel::leslie({1, 1, 1}, {0.5, 0.5, 0}),
                          Kernel::dense({{2, 1}, {1, 1}})}) {
    const auto h = estimate_h(EnvironmentStream(EnvironmentSpec::constant(m)), 0);
    CHECK(h.converged);
    CHECK(h.envelope <= 1e-10);
    const auto ref = oracle::perron_right(oracle::dense(m));
    for (std::size_t x = 0; x < m.size(); ++x) {
      CHECK(oracle::rel_err(h.values[x], ref[x] / ref[h.anchor]) <= 1e-8);
    }
  }
}

TEST_CASE("estimate_h refuses environments without coupling") {
  HOptions opt;
  opt.n_max = 20;
  CHECK_THROWS_AS(estimate_h(EnvironmentStream(EnvironmentSpec::constant(Kernel::identity(2))), 0, opt),
                  NoCoupling);
}

TEST_CASE("uniform approximation: identical measures give zero error") {
  const auto r = check_uniform_approx(EnvironmentStream(EnvironmentSpec::constant(Kernel::dense({{2, 1}, {1, 2}}))),
                                      Measure::dirac(2, 0), Measure::dirac(2, 0), 0.5, 1, 30);
  for (const auto& pt : r.points) CHECK(pt.log_error == -std::numeric_limits<double>::infinity());
}

TEST_CASE("uniform approximation decays at the spectral gap") {
  const auto r = check_uniform_approx(EnvironmentStream(EnvironmentSpec::constant(Kernel::dense({{2, 1}, {1, 2}}))),
                                      Measure::dirac(2, 0), Measure::dirac(2, 1), 0.5, 5, 60);
  CHECK(r.fitted_rate <= 1.0 / 3.0 + 0.02);
  CHECK(r.fitted_rate >= 1.0 / 3.0 - 0.02);
  CHECK(r.pass);
  CHECK(r.ratio_h == doctest::Approx(1.0));
}

TEST_CASE("uniform approximation on an i.i.d. family, 50 seeds") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto spec = EnvironmentSpec::iid(
        {Kernel::dense({{2, 1}, {1, 2}}), Kernel::dense({{1, 3}, {2, 1}})}, {0.5, 0.5}, seed);
    const auto r = check_uniform_approx(EnvironmentStream(spec), Measure::dirac(2, 0),
                                        Measure::dirac(2, 1), 0.8, 1, 60);
    CHECK_MESSAGE(r.pass, "seed " << seed);
  }
}

TEST_CASE("sequential Lyapunov estimates") {
  const auto ones = EnvironmentStream(EnvironmentSpec::constant(Kernel::ones(2)));
  for (std::size_t n : {1, 7, 100}) {
    CHECK(lyapunov_sequential(ones, Measure::dirac(2, 1), n).value == doctest::Approx(kLog2).epsilon(1e-15));
  }
  const auto sym = EnvironmentStream(EnvironmentSpec::constant(Kernel::dense({{2, 1}, {1, 2}})));
  CHECK(std::abs(lyapunov_sequential(sym, Measure::dirac(2, 0), 100000).value - kLog3) <= 1e-3);

  const auto est = lyapunov_sequential(scalar_iid(), Measure::uniform(2), 10000, 100);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.value - 1.5 * kLog2) <= 3.0 * est.std_error);
}

TEST_CASE("Kingman estimates") {
  const auto ones = EnvironmentSpec::constant(Kernel::ones(2));
  CHECK(lyapunov_kingman(ones, 50, 2).value == doctest::Approx(kLog2).epsilon(1e-14));

  const auto spec = scalar_iid(4);
  const auto one = lyapunov_kingman(spec, 1, 400);
  double mean = 0.0;
  for (std::size_t r = 0; r < 400; ++r) {
    EnvironmentStream s(spec.with_seed(derive_seed(spec.seed(), r, "kingman")));
    mean += std::log(s.next().op_norm());
  }
  CHECK(one.value == doctest::Approx(mean / 400).epsilon(1e-13));

  const auto deep = lyapunov_kingman(spec, 200, 200);
  CHECK(std::abs(deep.value - 1.5 * kLog2) <= 0.05);
}

TEST_CASE("stationary sampling: rank-one kernel is absorbed in one step") {
  const Kernel r1 = Kernel::dense({{1, 2, 5}, {2, 4, 10}, {0.5, 1, 2.5}});
  const auto s = sample_stationary(EnvironmentSpec::constant(r1), 1e-12, 100, 3);
  for (const auto& x : s) {
    CHECK(x.converged);
    CHECK(x.depth == 2);
    CHECK(x.tv_increment == 0.0);
    CHECK(tv_distance(x.measure, Measure(std::vector<double>{0.125, 0.25, 0.625})) < 1e-12);
  }
}

TEST_CASE("stationary sampling: primitive kernel gives the left Perron vector") {
  const Kernel m = Kernel::dense({{2, 1, 0.5}, {1, 1, 1}, {0.3, 2, 1}});
  const auto s = sample_stationary(EnvironmentSpec::constant(m), 1e-14, 2000, 2);
  const auto ref = oracle::perron_left(oracle::dense(m));
  for (const auto& x : s) {
    CHECK(x.converged);
    for (std::size_t y = 0; y < 3; ++y) CHECK(std::abs(x.measure[y] - ref[y]) <= 1e-10);
  }
}

TEST_CASE("stationary sampling: mixture of rank-one kernels") {
  const Kernel a = Kernel::dense({{1, 3}, {2, 6}});
  const Kernel b = Kernel::dense({{2, 1}, {4, 2}});
  const auto spec = EnvironmentSpec::iid({a, b}, {0.3, 0.7}, 8);
  const auto s = sample_stationary(spec, 1e-12, 50, 10000);
  const Measure va(std::vector<double>{0.25, 0.75}), vb(std::vector<double>{2.0 / 3.0, 1.0 / 3.0});
  std::size_t na = 0;
  for (const auto& x : s) {
    const double da = tv_distance(x.measure, va), db = tv_distance(x.measure, vb);
    CHECK(std::min(da, db) < 1e-12);
    na += da < db;
  }
  CHECK(std::abs(static_cast<double>(na) / 10000.0 - 0.3) <= 0.02);
  CHECK_THROWS_AS(sample_stationary(EnvironmentSpec::periodic({a, b}), 1e-12, 10, 1), InvalidInput);
}

TEST_CASE("integral estimates") {
  const auto ones = EnvironmentSpec::constant(Kernel::ones(2));
  const std::vector<Measure> pts = {Measure::dirac(2, 0), Measure::uniform(2)};
  const auto e = lyapunov_integral(ones, pts, 3);
  CHECK(e.value == doctest::Approx(kLog2).epsilon(1e-15));
  CHECK(e.std_error == 0.0);

  const auto spec = scalar_iid(6);
  const auto samples = sample_stationary(spec, 1e-12, 50, 4000);
  std::vector<Measure> lam;
  for (const auto& s : samples) lam.push_back(s.measure);
  const auto integ = lyapunov_integral(spec, lam);
  CHECK(std::abs(integ.value - 1.5 * kLog2) <= 3.0 * integ.std_error);
}

TEST_CASE("sequential and integral estimates agree on a 3-state family") {
  const auto spec = three_state();
  const auto seq = lyapunov_sequential(spec, Measure::uniform(3), 5000, 40);
  const auto samples = sample_stationary(spec, 1e-12, 500, 2000);
  std::vector<Measure> lam;
  for (const auto& s : samples) lam.push_back(s.measure);
  const auto integ = lyapunov_integral(spec, lam);
  CHECK(std::abs(seq.value - integ.value) <= 3.0 * std::hypot(seq.std_error, integ.std_error));
}

TEST_CASE("forward samples of a constant kernel converge to the left Perron vector") {
  const Kernel m = Kernel::dense({{2, 1}, {1, 1}});
  const auto ref = oracle::perron_left(oracle::dense(m));
  for (const auto& mu : sample_forward(EnvironmentSpec::constant(m), 200, 3)) {
    CHECK(std::abs(mu[0] - ref[0]) <= 1e-12);
  }
}

TEST_CASE("invariance of the stationary law") {
  const Kernel a = Kernel::dense({{1, 3}, {2, 6}});
  const Kernel b = Kernel::dense({{2, 1}, {4, 2}});
  const auto rank_one = EnvironmentSpec::iid({a, b}, {0.5, 0.5}, 3);
  std::vector<Measure> lam;
  for (const auto& s : sample_stationary(rank_one, 1e-12, 10, 400)) lam.push_back(s.measure);
  CHECK(invariance_check(rank_one, lam, 99).p_value > 0.01);

  const auto constant = EnvironmentSpec::constant(Kernel::dense({{2, 1}, {1, 2}}));
  lam.clear();
  for (const auto& s : sample_stationary(constant, 1e-14, 200, 100)) lam.push_back(s.measure);
  CHECK(std::abs(invariance_check(constant, lam, 19).statistic) <= 1e-12);

  std::size_t accepted = 0;
  const std::size_t seeds = 20;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const auto spec = EnvironmentSpec::iid({Kernel::dense({{2, 1}, {1, 2}}), Kernel::dense({{1, 3}, {2, 1}})},
                                           {0.5, 0.5}, 100 + seed);
    lam.clear();
    for (const auto& s : sample_stationary(spec, 1e-12, 500, 400)) lam.push_back(s.measure);
    accepted += invariance_check(spec, lam, 99).p_value > 0.01;
  }
  CHECK(accepted >= 19);
}

TEST_CASE("energy test detects a shifted law") {
  Engine g(5);
  std::vector<Measure> a, b;
  for (int i = 0; i < 60; ++i) {
    const double u = 0.2 * uniform01(g), v = 0.2 * uniform01(g) + 0.3;
    a.push_back(Measure(std::vector<double>{u, 1 - u}));
    b.push_back(Measure(std::vector<double>{v, 1 - v}));
  }
  CHECK(energy_test(a, b, 99, 1).p_value <= 0.01);
}

TEST_CASE("fitted geometric rate") {
  std::vector<double> n, y;
  for (int i = 0; i < 20; ++i) {
    n.push_back(i);
    y.push_back(i * std::log(0.25) + 3.0);
  }
  CHECK(fitted_geometric_rate(n, y) == doctest::Approx(0.25).epsilon(1e-12));
}

}
