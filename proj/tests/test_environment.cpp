#include <doctest.h>

#include <cmath>

#include "kprod/environment.hpp"
#include "kprod/rng.hpp"

using namespace kprod;

namespace {

const Kernel A = Kernel::ones(2);
const Kernel B = Kernel::ones(2).scaled(2.0);
const Kernel C = Kernel::identity(2);

bool is_b(const Kernel& k) { return k(0, 0) == 2.0; }

// Chi-square homogeneity statistic for counts of B at several offsets.
double chi_square(const std::vector<std::size_t>& hits, std::size_t trials) {
  double total = 0.0;
  for (auto h : hits) total += static_cast<double>(h);
  const double p = total / static_cast<double>(hits.size() * trials);
  double chi = 0.0;
  for (auto h : hits) {
    const double e1 = p * static_cast<double>(trials), e0 = static_cast<double>(trials) - e1;
    const double o1 = static_cast<double>(h), o0 = static_cast<double>(trials) - o1;
    chi += (o1 - e1) * (o1 - e1) / e1 + (o0 - e0) * (o0 - e0) / e0;
  }
  return chi;
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("scripted stream ends") {
  EnvironmentStream s(EnvironmentSpec::scripted({A, B}));
  CHECK(s.next() == A);
  CHECK(s.next() == B);
  CHECK_THROWS_AS(s.next(), EndOfScript);
}

TEST_CASE("single-member iid family is constant") {
  EnvironmentStream s(EnvironmentSpec::iid({B}, {1.0}, 9));
  for (int i = 0; i < 100; ++i) CHECK(s.next() == B);
  CHECK(EnvironmentSpec::constant(A).is_iid());
}

TEST_CASE("iid frequencies concentrate") {
  EnvironmentStream s(EnvironmentSpec::iid({A, B}, {0.5, 0.5}, 123));
  std::size_t twos = 0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) twos += is_b(s.next());
  CHECK(std::abs(static_cast<double>(twos) / n - 0.5) <= 0.01);
}

TEST_CASE("spawn_shifted replays the parent") {
  const auto spec = EnvironmentSpec::iid({A, B, C}, {0.2, 0.5, 0.3}, 77);
  EnvironmentStream parent(spec);
  EnvironmentStream same = parent.spawn_shifted(0);
  EnvironmentStream shifted = parent.spawn_shifted(7);
  std::vector<Kernel> ref = EnvironmentStream(spec).take(107);
  for (std::size_t j = 0; j < 100; ++j) {
    CHECK(same.next() == ref[j]);
    CHECK(shifted.next() == ref[7 + j]);
  }
  EnvironmentStream script(EnvironmentSpec::scripted({A, B, C}));
  EnvironmentStream tail = script.spawn_shifted(1);
  CHECK(tail.next() == B);
  CHECK(tail.next() == C);
  CHECK_THROWS_AS(tail.next(), EndOfScript);
}

TEST_CASE("shift coherence, including Markov streams") {
  const auto spec = EnvironmentSpec::markov({A, B, C}, {{0.1, 0.6, 0.3}, {0.5, 0.0, 0.5}, {0.9, 0.1, 0.0}}, 5);
  EnvironmentStream s(spec);
  s.take(3);
  EnvironmentStream a = s.spawn_shifted(4).spawn_shifted(9);
  EnvironmentStream b = s.spawn_shifted(13);
  for (int i = 0; i < 200; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("identical spec and seed give identical sequences") {
  const auto spec = EnvironmentSpec::iid({A, B, C}, {0.2, 0.5, 0.3}, 31);
  EnvironmentStream x(spec), y(spec);
  for (int i = 0; i < 500; ++i) CHECK(x.next() == y.next());
  EnvironmentStream z(spec.with_seed(32));
  int differ = 0;
  EnvironmentStream x2(spec);
  for (int i = 0; i < 500; ++i) differ += !(x2.next() == z.next());
  CHECK(differ > 0);
}

TEST_CASE("law of M_k does not depend on k") {
  const std::size_t trials = 10000;
  const std::vector<std::size_t> offsets = {0, 1, 17, 250};
  for (const auto& spec : {EnvironmentSpec::iid({A, B}, {0.4, 0.6}, 1),
                           EnvironmentSpec::markov({A, B}, {{0.2, 0.8}, {0.5, 0.5}}, 1)}) {
    std::vector<std::size_t> hits(offsets.size(), 0);
    for (std::size_t r = 0; r < trials; ++r) {
      EnvironmentStream s(spec.with_seed(derive_seed(99, r, "stationarity")));
      for (std::size_t i = 0; i < offsets.size(); ++i) {
        hits[i] += is_b(s.spawn_shifted(offsets[i]).next());
      }
    }
    // 1% critical value of chi-square with 3 degrees of freedom.
    CHECK(chi_square(hits, trials) < 11.345);
  }
}

TEST_CASE("Markov stationary law and validation") {
  const auto spec = EnvironmentSpec::markov({A, B}, {{0.2, 0.8}, {0.5, 0.5}});
  const auto& pi = spec.stationary();
  CHECK(pi[0] == doctest::Approx(5.0 / 13.0).epsilon(1e-12));
  CHECK(pi[1] == doctest::Approx(8.0 / 13.0).epsilon(1e-12));
  // A periodic chain is accepted: aperiodicity is not required.
  const auto flip = EnvironmentSpec::markov({A, B}, {{0.0, 1.0}, {1.0, 0.0}});
  CHECK(flip.stationary()[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(EnvironmentSpec::markov({A, B}, {{1.0, 0.0}, {0.0, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(EnvironmentSpec::iid({A, B}, {0.5, 0.6}), InvalidInput);
  CHECK_THROWS_AS(EnvironmentSpec::iid({A, Kernel::ones(3)}, {0.5, 0.5}), DimensionError);
}

TEST_CASE("periodic streams cycle and are flagged deterministic") {
  const auto spec = EnvironmentSpec::periodic({A, B, C});
  CHECK(spec.is_deterministic());
  EnvironmentStream s(spec);
  for (int i = 0; i < 9; ++i) {
    const Kernel& k = s.next();
    CHECK(k == (i % 3 == 0 ? A : i % 3 == 1 ? B : C));
  }
}

TEST_CASE("check_basic_assumptions") {
  CHECK(check_basic_assumptions(EnvironmentSpec::constant(A)).assumption2);
  const auto bad = check_basic_assumptions(
      EnvironmentSpec::iid({A, Kernel::dense({{0, 0}, {1, 1}})}, {0.5, 0.5}));
  CHECK_FALSE(bad.assumption2);
  REQUIRE(bad.offending_state.has_value());
  CHECK(*bad.offending_state == 0);
  CHECK(*bad.offending_kernel == 1);
  const auto leslie = check_basic_assumptions(EnvironmentSpec::iid(
      {Kernel::leslie({1, 2, 1}, {0.5, 0.3, 0}), Kernel::leslie({0.5, 1, 1}, {0.9, 0.9, 0})},
      {0.5, 0.5}));
  CHECK(leslie.assumption2);
  CHECK(leslie.assumption3);
}

TEST_CASE("counter-based seeds are distinct across roles and replicas") {
  CHECK(derive_seed(1, 0, "a") != derive_seed(1, 0, "b"));
  CHECK(derive_seed(1, 0, "a") != derive_seed(1, 1, "a"));
  CHECK(derive_seed(1, 0, "a") == derive_seed(1, 0, "a"));
  const double u = counter_uniform(5, 10);
  CHECK(u >= 0.0);
  CHECK(u < 1.0);
}

}
