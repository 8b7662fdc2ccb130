#include "kprod/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kprod {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double survival_product(std::span<const double> gammas, std::size_t k, std::size_t n) {
  if (n > gammas.size()) throw DimensionError("gamma sequence shorter than the horizon");
  double prod = 1.0;
  for (std::size_t i = k; i < n; ++i) prod *= 1.0 - gammas[i];
  return prod;
}

InequalityReport finish(std::string name, double lhs, double rhs) {
  InequalityReport r;
  r.check = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.pass = r.slack >= -kIneqSlack;
  return r;
}

}  // namespace

Measure AuxiliaryOperator::row(std::size_t x) const {
  return Measure(std::vector<double>(values.begin() + static_cast<long>(x * p),
                                     values.begin() + static_cast<long>((x + 1) * p)));
}

Measure AuxiliaryOperator::apply(const Measure& rho) const {
  if (rho.size() != p) throw DimensionError("AuxiliaryOperator::apply: size mismatch");
  Measure out(p);
  for (std::size_t x = 0; x < p; ++x) {
    for (std::size_t y = 0; y < p; ++y) out[y] += rho[x] * values[x * p + y];
  }
  return out;
}

AuxiliaryOperator aux_P(const ProductWindow& window, std::size_t k, std::size_t n,
                        std::size_t N) {
  if (!(k <= n && n <= N)) throw InvalidInput("aux_P: need k <= n <= N");
  const std::size_t p = window.dim();
  if (p > kMaxDenseSize) throw InvalidInput("aux_P: state space too large for a dense matrix");
  const LogMatrix prod = window.product(k, n);
  const LogVector m_nN = window.mass(n, N);
  const LogVector m_kN = window.mass(k, N);
  AuxiliaryOperator P;
  P.p = p;
  P.k = k;
  P.n = n;
  P.N = N;
  P.values.assign(p * p, 0.0);
  for (std::size_t x = 0; x < p; ++x) {
    if (!(m_kN.values[x] > 0.0)) {
      throw AssumptionViolation("Assumption 2: m_{k,N} vanishes", x);
    }
    const double log_denominator = std::log(m_kN.values[x]) + m_kN.log_scale;
    const double scale = std::exp(prod.log_scale + m_nN.log_scale - log_denominator);
    for (std::size_t y = 0; y < p; ++y) {
      P.values[x * p + y] = prod.values[x * p + y] * m_nN.values[y] * scale;
    }
  }
  return P;
}

AuxiliaryOperator operator*(const AuxiliaryOperator& a, const AuxiliaryOperator& b) {
  if (a.p != b.p) throw DimensionError("auxiliary operator sizes differ");
  const std::size_t p = a.p;
  AuxiliaryOperator c;
  c.p = p;
  c.k = a.k;
  c.n = b.n;
  c.N = a.N;
  c.values.assign(p * p, 0.0);
  for (std::size_t x = 0; x < p; ++x) {
    for (std::size_t z = 0; z < p; ++z) {
      const double w = a.values[x * p + z];
      for (std::size_t y = 0; y < p; ++y) c.values[x * p + y] += w * b.values[z * p + y];
    }
  }
  return c;
}

InequalityReport check_doeblin_minoration(const ProductWindow& window, std::size_t n,
                                          std::size_t N, const AdmissibleTriplet& triplet) {
  const AuxiliaryOperator P = aux_P(window, n, n + 1, N);
  const LogVector m = window.mass(n + 1, N);
  const std::size_t p = P.p;
  double nu_m = 0.0;
  for (std::size_t y = 0; y < p; ++y) nu_m += triplet.nu[y] * m.values[y];
  if (!(nu_m > 0.0)) {
    throw AssumptionViolation("degenerate minoration: nu(m_{n+1,N}) = 0", 0);
  }
  InequalityReport worst;
  worst.check = "doeblin_minoration";
  worst.slack = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < p; ++x) {
    for (std::size_t y = 0; y < p; ++y) {
      const double lower = triplet.gamma * triplet.nu[y] * m.values[y] / nu_m;
      const double slack = P(x, y) - lower;
      if (slack < worst.slack) {
        worst.slack = slack;
        worst.lhs = lower;
        worst.rhs = P(x, y);
        worst.witness_x = x;
        worst.witness_y = y;
      }
    }
  }
  worst.pass = worst.slack >= -kIneqSlack;
  return worst;
}

InequalityReport projective_contraction_check(const ProductWindow& window, const Measure& mu1,
                                              const Measure& mu2, std::size_t k,
                                              std::size_t n, std::span<const double> gammas) {
  const Measure a = window.push(mu1, k, n).measure;
  const Measure b = window.push(mu2, k, n).measure;
  return finish("projective_contraction", tv_distance(a, b),
                2.0 * survival_product(gammas, k, n));
}

InequalityReport growth_ratio_check(const ProductWindow& window, const Measure& mu1,
                                    const Measure& mu2, std::size_t k, std::size_t n,
                                    std::size_t N, std::span<const double> gammas) {
  if (!(k <= n && n <= N && n >= 1)) throw InvalidInput("growth_ratio_check: need k <= n <= N");
  const LogVector m_kN = window.mass(k, N);
  const LogVector m_kn = window.mass(k, n);
  const double log_a1 = log_pair(mu1, m_kN) - log_pair(mu1, m_kn);
  const double log_a2 = log_pair(mu2, m_kN) - log_pair(mu2, m_kn);
  if (!std::isfinite(log_a1) || !std::isfinite(log_a2)) throw MassAnnihilated();
  if (n > gammas.size()) throw DimensionError("gamma sequence shorter than the horizon");
  const double g = gammas[n - 1];
  const double lhs = g == 0.0 ? 0.0 : g * std::abs(std::expm1(log_a1 - log_a2));
  return finish("growth_ratio", lhs, 2.0 * survival_product(gammas, k, n));
}

SandwichReport sandwich_gamma_check(const ProductWindow& window, const Measure& mu,
                                    std::size_t k, std::size_t n, double gamma_k) {
  if (window.begin() != 0) throw InvalidInput("sandwich_gamma_check: window must start at 0");
  if (!(k < n)) throw InvalidInput("sandwich_gamma_check: need k < n");
  SandwichReport r;
  const double a = window.push(mu, 0, k + 1).log_norm;
  const double b = window.log_op_norm(k + 1, n);
  r.log_middle = window.push(mu, 0, n).log_norm;
  r.log_upper = a + b;
  r.log_lower = gamma_k > 0.0 ? std::log(gamma_k) + a + b : kNegInf;
  const double tol = kIneqSlack * std::max(1.0, std::abs(r.log_middle));
  r.pass = r.log_lower <= r.log_middle + tol && r.log_middle <= r.log_upper + tol;
  return r;
}

InequalityReport tv_contraction_check(const ProductWindow& window, const Measure& rho,
                                      std::size_t k, std::size_t n, std::size_t N,
                                      std::span<const double> gammas) {
  if (std::abs(rho.mass()) > 1e-12 * std::max(1.0, rho.tv_norm())) {
    throw InvalidInput("tv_contraction_check: rho must have zero total mass");
  }
  const AuxiliaryOperator P = aux_P(window, k, n, N);
  return finish("tv_contraction", P.apply(rho).tv_norm(),
                survival_product(gammas, k, n) * rho.tv_norm());
}

std::vector<Kernel> random_window(std::size_t p, std::size_t length, Engine& g,
                                  double zero_prob) {
  std::vector<Kernel> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    std::vector<double> a(p * p);
    for (std::size_t x = 0; x < p; ++x) {
      const std::size_t keep = static_cast<std::size_t>(uniform01(g) * static_cast<double>(p));
      for (std::size_t y = 0; y < p; ++y) {
        const double v = std::exp(4.0 * uniform01(g) - 2.0);
        const bool zero = y != keep && uniform01(g) < zero_prob;
        a[x * p + y] = zero ? 0.0 : v;
      }
    }
    out.push_back(Kernel::dense(p, std::move(a)));
  }
  return out;
}

Measure random_measure(std::size_t p, Engine& g) {
  Measure mu(p);
  for (std::size_t x = 0; x < p; ++x) mu[x] = std::exp(4.0 * uniform01(g) - 2.0);
  return mu.normalized();
}

std::vector<SuiteRecord> inequality_suite(const ProductWindow& window, std::size_t instance,
                                          std::uint64_t seed) {
  if (window.begin() != 0) throw InvalidInput("inequality_suite: window must start at 0");
  const std::size_t N = window.end();
  if (N < 2) throw InvalidInput("inequality_suite: need at least two kernels");
  const std::size_t p = window.dim();
  Engine g(derive_seed(seed, instance, "contract"));
  auto draw = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(uniform01(g) * static_cast<double>(hi - lo));
  };
  const std::size_t n = draw(1, N);
  const std::size_t k = draw(0, n);

  std::vector<AdmissibleTriplet> triplets;
  std::vector<double> gammas;
  for (std::size_t i = 0; i < N; ++i) {
    triplets.push_back(triplet_at(window, i));
    gammas.push_back(triplets.back().gamma);
  }
  const Measure mu1 = random_measure(p, g);
  const Measure mu2 = random_measure(p, g);
  Measure rho(p);
  for (std::size_t x = 0; x < p; ++x) rho[x] = mu1[x] - mu2[x];
  const double drift = rho.mass() / static_cast<double>(p);
  for (std::size_t x = 0; x < p; ++x) rho[x] -= drift;

  std::vector<SuiteRecord> out;
  auto add = [&](InequalityReport r) { out.push_back({instance, k, n, N, std::move(r)}); };
  add(check_doeblin_minoration(window, n, N, triplets[n]));
  add(projective_contraction_check(window, mu1, mu2, k, n, gammas));
  add(growth_ratio_check(window, mu1, mu2, k, n, N, gammas));
  add(tv_contraction_check(window, rho, k, n, N, gammas));
  const SandwichReport s = sandwich_gamma_check(window, mu1, k, n, gammas[k]);
  const double tol = kIneqSlack * std::max(1.0, std::abs(s.log_middle));
  InequalityReport lower = finish("sandwich_lower", s.log_lower, s.log_middle);
  lower.pass = s.log_lower <= s.log_middle + tol;
  InequalityReport upper = finish("sandwich_upper", s.log_middle, s.log_upper);
  upper.pass = s.log_middle <= s.log_upper + tol;
  add(std::move(lower));
  add(std::move(upper));
  return out;
}

}  // namespace kprod
