#include "kprod/leslie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kprod/parallel.hpp"
#include "kprod/rng.hpp"

namespace kprod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_leslie(const Kernel& k) {
  if (!k.is_leslie()) throw InvalidInput("expected a Leslie kernel");
}

double fertility_ratio_sup(const std::vector<double>& f, std::optional<std::size_t>& witness) {
  double running_min = kInf;
  double sup = 1.0;
  for (std::size_t y = 0; y < f.size(); ++y) {
    if (f[y] == 0.0) {
      witness = y;
      return kInf;
    }
    running_min = std::min(running_min, f[y]);
    sup = std::max(sup, f[y] / running_min);
  }
  return sup;
}

double sup_s_over_f(const Kernel& k) {
  double sup = 0.0;
  const auto& f = k.fertility();
  const auto& s = k.survival();
  for (std::size_t x = 0; x < f.size(); ++x) {
    if (s[x] == 0.0) continue;
    if (f[x] == 0.0) return kInf;
    sup = std::max(sup, s[x] / f[x]);
  }
  return sup;
}

bool grew(double small, double large) {
  return large > small * (1.0 + 1e-12) + 1e-300;
}

}  // namespace

Kernel build_leslie(std::vector<double> f, std::vector<double> s) {
  Kernel k = Kernel::leslie(std::move(f), std::move(s));
  if (auto x = k.zero_row()) {
    throw AssumptionViolation("Assumption 2: f_x + s_x = 0", *x);
  }
  return k;
}

double leslie_c(const Kernel& leslie) {
  require_leslie(leslie);
  const double r = sup_s_over_f(leslie);
  if (!std::isfinite(r)) return 0.0;
  const auto& f = leslie.fertility();
  if (std::any_of(f.begin(), f.end(), [](double v) { return v == 0.0; })) return 0.0;
  return 1.0 / (1.0 + r);
}

SupResult d_prime(const std::vector<std::vector<double>>& fertilities) {
  SupResult r;
  if (fertilities.empty()) return r;
  double half_sup = 1.0;
  const std::size_t half = fertilities.size() / 2;
  for (std::size_t k = 0; k < fertilities.size(); ++k) {
    std::optional<std::size_t> witness;
    const double v = fertility_ratio_sup(fertilities[k], witness);
    if (v > r.value) {
      r.value = v;
      if (!std::isfinite(v)) {
        r.witness_k = k;
        r.witness_x = witness;
        return r;
      }
      r.witness_k = k;
    }
    if (k + 1 == half) half_sup = r.value;
  }
  r.unbounded_suspect = half > 0 && grew(half_sup, r.value);
  return r;
}

SupResult d_prime(const std::vector<Kernel>& kernels) {
  std::vector<std::vector<double>> f;
  f.reserve(kernels.size());
  for (const auto& k : kernels) {
    require_leslie(k);
    f.push_back(k.fertility());
  }
  return d_prime(f);
}

SupResult d_double_prime(const std::vector<Kernel>& kernels) {
  SupResult r;
  if (kernels.empty()) return r;
  for (const auto& k : kernels) require_leslie(k);
  const std::size_t K = kernels.front().size();
  const std::size_t H = kernels.size();

  // log prefix products along the diagonal starting at x: L_x(k).
  auto log_s = [&](std::size_t k, std::size_t x) {
    const double v = kernels[k].survival()[x];
    return v > 0.0 ? std::log(v) : kNegInf;
  };
  std::vector<double> denom(H, 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < H && k < K; ++k) {
    acc += log_s(k, k);
    denom[k] = acc;
  }
  double log_sup = 0.0;
  double log_sup_half = 0.0;
  const std::size_t half_h = H / 2;
  for (std::size_t x = 0; x < K; ++x) {
    double num = 0.0;
    for (std::size_t k = 0; k < H && x + k < K; ++k) {
      num += log_s(k, x + k);
      if (num == kNegInf) break;
      const double den = k < K ? denom[k] : kNegInf;
      if (den == kNegInf) {
        r.value = kInf;
        r.witness_k = k;
        r.witness_x = x;
        return r;
      }
      const double term = num - den;
      if (term > log_sup) {
        log_sup = term;
        r.witness_k = k;
        r.witness_x = x;
      }
      if (k < half_h) log_sup_half = std::max(log_sup_half, term);
    }
  }
  r.value = std::exp(log_sup);
  r.unbounded_suspect = half_h > 0 && grew(std::exp(log_sup_half), r.value);

  // Closed-form bound when every survival sequence is nonincreasing from
  // some x0 on and positive up to x0. The truncation zero at K-1 is not
  // evidence of monotonicity, so the tail must hold two entries before it.
  if (K < 3) return r;
  std::size_t x0 = 0;
  for (const auto& k : kernels) {
    const auto& s = k.survival();
    std::size_t from = K - 2;
    while (from > 0 && s[from - 1] >= s[from]) --from;
    x0 = std::max(x0, from);
  }
  bool positive = true;
  for (const auto& k : kernels) {
    for (std::size_t x = 0; x <= x0 && x < K; ++x) positive = positive && k.survival()[x] > 0.0;
  }
  if (positive && x0 + 3 <= K) {
    double ratio = 1.0;
    for (const auto& k : kernels) {
      const auto& s = k.survival();
      for (std::size_t x = 0; x <= x0; ++x) {
        for (std::size_t y = x; y <= x0; ++y) ratio = std::max(ratio, s[y] / s[x]);
      }
    }
    const double bound = std::pow(ratio, static_cast<double>(x0));
    if (std::isfinite(bound)) {
      r.value = bound;
      r.exact = true;
      r.unbounded_suspect = false;
    }
  }
  return r;
}

LeslieTriplet leslie_triplet(EnvironmentStream stream, std::size_t horizon) {
  if (horizon < 1) throw InvalidInput("leslie_triplet: horizon must be >= 1");
  LeslieTriplet t;
  const Kernel m0 = stream.next();
  require_leslie(m0);
  if (auto x = m0.zero_row()) throw AssumptionViolation("Assumption 2: f_x + s_x = 0", *x);
  const std::vector<Kernel> future = stream.take(horizon);
  const std::size_t p = m0.size();

  const SupResult dp = d_prime(future);
  const SupResult dpp = d_double_prime(future);
  t.d_prime = dp.value;
  t.d_double_prime = dpp.value;
  auto& tr = t.triplet;
  tr.nu = Measure::dirac(p, 0);
  tr.c = leslie_c(m0);
  tr.d = 1.0 / (dp.value * dpp.value);
  tr.gamma = tr.c * tr.d;
  tr.horizon = horizon + 1;
  tr.provenance = Provenance::leslie_closed_form;

  t.certified_c = max_c(m0, tr.nu);
  ProductWindow window(future, 1);
  t.certified_d = d_horizon(tr.nu, window, 1, horizon + 1).d;
  t.certificate_ok = std::abs(tr.c - t.certified_c) <= 1e-12 && tr.d <= t.certified_d + 1e-12;
  return t;
}

LeslieAudit audit_conditions(const EnvironmentSpec& spec, std::size_t samples,
                             std::size_t horizon, unsigned threads) {
  const auto& family = spec.family();
  for (const auto& k : family) require_leslie(k);
  LeslieAudit audit;
  auto add = [&](std::string name, bool pass, bool exact, std::string note) {
    audit.conditions.push_back({std::move(name), pass, exact, std::move(note)});
  };

  bool positivity = true;
  for (const auto& k : family) positivity = positivity && !k.zero_row();
  add("i", positivity, true, "f_x + s_x > 0 for every family member");
  add("ii", true, true, "finite family: log+ sup (f + s) is bounded");

  const SupResult dp = d_prime(family);
  add("iii", std::isfinite(dp.value), true,
      "A = sup_{x<=y} f_y / f_x over the family = " + std::to_string(dp.value));

  bool any_finite_ratio = false, all_finite_ratio = true;
  for (const auto& k : family) {
    const bool fin = std::isfinite(sup_s_over_f(k));
    any_finite_ratio = any_finite_ratio || fin;
    all_finite_ratio = all_finite_ratio && fin;
  }

  samples = std::max<std::size_t>(samples, 1);
  std::vector<double> dpp(samples), dh(samples), gam(samples);
  std::vector<char> finite_pair(samples), suspect(samples);
  parallel_for(samples, threads, [&](std::size_t r) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), r, "audit")));
    const Kernel m0 = stream.next();
    const std::vector<Kernel> future = stream.take(horizon);
    const SupResult s = d_double_prime(future);
    dpp[r] = s.value;
    suspect[r] = s.unbounded_suspect;
    finite_pair[r] = std::isfinite(sup_s_over_f(m0)) && std::isfinite(s.value);
    ProductWindow window(future, 1);
    dh[r] = d_horizon(Measure::dirac(m0.size(), 0), window, 1, horizon + 1).d;
    const double dprime = d_prime(future).value;
    gam[r] = leslie_c(m0) / (dprime * s.value);
    if (!std::isfinite(gam[r])) gam[r] = 0.0;
  });

  const bool iv = any_finite_ratio &&
                  std::any_of(finite_pair.begin(), finite_pair.end(), [](char c) { return c; });
  add("iv", iv, false,
      "horizon-bounded: d'' is evaluated on sampled futures of length " +
          std::to_string(horizon) + "; necessary-side check only");
  add("v", all_finite_ratio, true, "sup s/f finite for every family member");
  const bool vi_finite =
      std::all_of(dpp.begin(), dpp.end(), [](double v) { return std::isfinite(v); });
  const bool vi_stable = std::none_of(suspect.begin(), suspect.end(), [](char c) { return c; });
  add("vi", vi_finite && vi_stable, false,
      vi_stable ? "d'' finite on every sampled horizon"
                : "d'' still growing with the horizon: unbounded suspect");

  std::size_t positive = 0;
  for (double g : gam) positive += g > 0.0;
  audit.prob_gamma_positive = static_cast<double>(positive) / static_cast<double>(samples);
  audit.min_d_horizon = *std::min_element(dh.begin(), dh.end());
  audit.gamma_zero_suspect = audit.min_d_horizon < 1e-3;

  const auto pass = [&](std::size_t i) { return audit.conditions[i].pass; };
  audit.assumption2 = pass(0);
  audit.assumption3 = pass(0) && pass(1);
  audit.assumption4 = audit.assumption3 && pass(2) && pass(3);
  audit.assumption4_plus = audit.assumption4 && pass(4) && pass(5);
  return audit;
}

std::vector<int> squared_blocks(std::size_t K) {
  std::vector<int> eps;
  eps.reserve(K);
  for (std::size_t j = 1; eps.size() < K; ++j) {
    for (std::size_t i = 0; i < j * j && eps.size() < K; ++i) eps.push_back(0);
    for (std::size_t i = 0; i < j && eps.size() < K; ++i) eps.push_back(1);
  }
  return eps;
}

std::size_t squared_blocks_length(std::size_t n) { return n * (n + 1) * (n + 2) / 3; }

Counterexample build_counterexample(double a, double delta, std::vector<int> eps) {
  if (!(a > 1.0)) throw InvalidInput("counterexample: a must exceed 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("counterexample: delta must lie in (0,1)");
  if (eps.empty()) throw InvalidInput("counterexample: empty mark sequence");
  Counterexample ce;
  ce.a = a;
  ce.delta = delta;
  ce.K = eps.size();
  std::size_t ones = 0, run = 0;
  for (std::size_t x = 0; x < eps.size(); ++x) {
    if (eps[x] != 0 && eps[x] != 1) throw InvalidInput("counterexample: marks must be 0 or 1");
    ones += static_cast<std::size_t>(eps[x]);
    run = eps[x] ? run + 1 : 0;
    ce.longest_run = std::max(ce.longest_run, run);
    const double density = static_cast<double>(ones) / static_cast<double>(x + 1);
    if (density >= 1.0) {
      throw InvalidInput("counterexample: prefix of length " + std::to_string(x + 1) +
                         " has density 1");
    }
    ce.alpha = std::max(ce.alpha, density);
  }
  const double final_density = static_cast<double>(ones) / static_cast<double>(eps.size());
  if (!(final_density < ce.alpha)) {
    throw InvalidInput("counterexample: prefix density does not decrease (final " +
                       std::to_string(final_density) + ")");
  }
  std::vector<double> f(ce.K), s(ce.K);
  for (std::size_t x = 0; x < ce.K; ++x) {
    const double m = 1.0 + (a - 1.0) * eps[x];
    f[x] = delta * m;
    s[x] = (1.0 - delta) * m;
  }
  ce.eps = std::move(eps);
  ce.kernel = build_leslie(std::move(f), std::move(s));
  ce.c = leslie_c(ce.kernel);
  ce.growth = std::pow(a, 1.0 - ce.alpha) * (1.0 - ce.c) / 2.0;
  return ce;
}

CounterexampleReport verify_counterexample(const Counterexample& ce, std::size_t n_verify,
                                           std::size_t d_horizon_max) {
  CounterexampleReport rep;
  rep.criterion_met = ce.growth > 1.0;
  n_verify = std::min(n_verify, ce.longest_run);
  const std::size_t sweep = std::max(n_verify, d_horizon_max);
  const std::size_t p = ce.K;
  LogVector m{std::vector<double>(p, 1.0), 0.0};
  const double log_growth = std::log(ce.growth);
  double d_running = 1.0;
  rep.d_series.push_back(1.0);  // m_{1,1} = 1
  bool ok = rep.criterion_met;
  for (std::size_t n = 1; n <= sweep; ++n) {
    apply_right(ce.kernel, m);
    const double log_ratio = m.log_sup() - m.log_at(0);
    if (n <= n_verify) {
      const double rhs = static_cast<double>(n) * log_growth;
      rep.rows.push_back({n, log_ratio, rhs});
      ok = ok && log_ratio >= rhs - 1e-9;
    }
    // In a constant environment m_{1,n+1} = m_{0,n}.
    if (n + 1 <= d_horizon_max) {
      d_running = std::min(d_running, std::exp(-log_ratio));
      rep.d_series.push_back(d_running);
    }
  }
  rep.divergence_verified = ok && !rep.rows.empty();
  if (d_horizon_max >= 1) {
    EnvironmentStream stream(EnvironmentSpec::constant(ce.kernel));
    const DResult d = d_horizon(Measure::dirac(p, 0), stream.spawn_shifted(1), d_horizon_max);
    rep.d_at_horizon = d.d;
    rep.d_horizon_used = d.horizon;
  }
  return rep;
}

}  // namespace kprod
