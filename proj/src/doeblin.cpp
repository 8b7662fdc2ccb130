#include "kprod/doeblin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kprod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Measure> candidate_measures(const Kernel& m) {
  const std::size_t p = m.size();
  std::vector<Measure> out;
  out.reserve(p + 2);
  for (std::size_t y = 0; y < p; ++y) out.push_back(Measure::dirac(p, y));
  if (p > 1) {
    out.push_back(Measure::uniform(p));
    Measure colmax(p);
    for (std::size_t x = 0; x < p; ++x) {
      for (std::size_t y = 0; y < p; ++y) colmax[y] = std::max(colmax[y], m(x, y));
    }
    if (colmax.mass() > 0.0) out.push_back(colmax.normalized());
  }
  return out;
}

// masses[j] = m_{1,1+j}.
double d_from_masses(const Measure& nu, const std::vector<LogVector>& masses,
                     std::size_t n_min) {
  double log_d = 0.0;
  for (std::size_t n = std::max<std::size_t>(n_min, 1); n <= masses.size(); ++n) {
    const LogVector& m = masses[n - 1];
    const double top = m.log_sup();
    if (!std::isfinite(top)) {
      throw AssumptionViolation("degenerate product: |||M_{1,n}||| = 0 at n", n);
    }
    log_d = std::min(log_d, log_pair(nu, m) - top);
  }
  return std::exp(log_d);
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::exact: return "exact";
    case Provenance::horizon_bounded: return "horizon-bounded";
    case Provenance::leslie_closed_form: return "leslie-closed-form";
  }
  return "unknown";
}

double max_c(const Kernel& m, const Measure& nu) {
  if (nu.size() != m.size()) throw DimensionError("max_c: nu and kernel sizes differ");
  if (auto x = m.zero_row()) throw AssumptionViolation("Assumption 2: zero row", *x);
  std::vector<std::size_t> support;
  for (std::size_t y = 0; y < nu.size(); ++y) {
    if (nu[y] > 0.0) support.push_back(y);
  }
  if (support.empty()) throw InvalidInput("max_c: nu must be a probability vector");
  double c = 1.0;
  for (std::size_t x = 0; x < m.size(); ++x) {
    const double mx = m.row_sum(x);
    for (std::size_t y : support) c = std::min(c, m(x, y) / (mx * nu[y]));
    if (c == 0.0) return 0.0;
  }
  return std::clamp(c, 0.0, 1.0);
}

DResult d_horizon(const Measure& nu, const ProductWindow& future, std::size_t start,
                  std::size_t n_max, std::size_t n_min) {
  if (n_max < 1) throw InvalidInput("d_horizon: N_max must be >= 1");
  if (start < future.begin() || start > future.end()) {
    throw DimensionError("d_horizon: start outside window");
  }
  n_max = std::min(n_max, future.end() - start + 1);
  const auto masses = future.masses_from(start, start + n_max - 1);
  return {d_from_masses(nu, masses, n_min), n_max};
}

DResult d_horizon(const Measure& nu, EnvironmentStream stream_at_1, std::size_t n_max) {
  if (n_max < 1) throw InvalidInput("d_horizon: N_max must be >= 1");
  if (n_max == 1) return {1.0, 1};
  ProductWindow w(stream_at_1.take(n_max - 1), 1);
  return d_horizon(nu, w, 1, n_max);
}

AdmissibleTriplet triplet_at(const ProductWindow& window, std::size_t n,
                             const std::optional<Measure>& nu, std::size_t max_horizon) {
  const Kernel& m = window.kernel(n);
  const std::size_t horizon = std::min(window.end() - n, std::max<std::size_t>(max_horizon, 1));
  const auto masses = window.masses_from(n + 1, n + horizon);
  auto build = [&](const Measure& candidate) {
    AdmissibleTriplet t;
    t.nu = candidate;
    t.c = max_c(m, candidate);
    t.horizon = horizon;
    t.d = d_from_masses(candidate, masses, 1);
    t.gamma = t.c * t.d;
    return t;
  };
  if (nu) return build(*nu);
  AdmissibleTriplet best;
  bool first = true;
  for (const auto& candidate : candidate_measures(m)) {
    AdmissibleTriplet t = build(candidate);
    if (first || t.gamma > best.gamma) {
      best = std::move(t);
      first = false;
    }
  }
  return best;
}

std::vector<double> gamma_series(const ProductWindow& window, std::size_t first,
                                 std::size_t last, const std::optional<Measure>& nu,
                                 std::size_t max_horizon) {
  std::vector<double> out;
  out.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) {
    out.push_back(triplet_at(window, i, nu, max_horizon).gamma);
  }
  return out;
}

double gamma_bar(std::span<const double> gammas) {
  if (gammas.empty()) throw InvalidInput("gamma_bar: empty sample");
  double acc = 0.0;
  for (double g : gammas) {
    if (!(g >= 0.0 && g <= 1.0)) throw InvalidInput("gamma_bar: gamma outside [0,1]");
    if (g == 1.0) return 0.0;
    acc += std::log1p(-g);
  }
  return std::exp(acc / static_cast<double>(gammas.size()));
}

std::optional<std::size_t> tau_eps(std::span<const double> gammas, std::size_t n, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("tau_eps: eps must be positive");
  if (n > gammas.size()) throw DimensionError("tau_eps: gamma sequence shorter than n");
  for (std::size_t i = n; i >= 1; --i) {
    if (gammas[i - 1] >= eps) return i;
  }
  return std::nullopt;
}

double Gamma(std::size_t k, std::size_t n, std::span<const double> gammas) {
  if (n < 1 || k > n) throw InvalidInput("Gamma: need k <= n and n >= 1");
  if (n > gammas.size()) throw DimensionError("Gamma: gamma sequence shorter than n");
  const double last = gammas[n - 1];
  if (last == 0.0) return kInf;
  double prod = 1.0;
  for (std::size_t i = k; i < n; ++i) prod *= 1.0 - gammas[i];
  return prod / last;
}

std::optional<double> Delta(std::size_t k, std::size_t n, double eps,
                            std::span<const double> gammas) {
  const auto tau = tau_eps(gammas, n, eps);
  if (!tau || *tau <= k) return std::nullopt;
  const double g = Gamma(k, *tau, gammas);
  if (!(2.0 * g < 1.0)) return std::nullopt;
  return 8.0 * g / (1.0 - 2.0 * g);
}

}  // namespace kprod
