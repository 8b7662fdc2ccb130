#pragma once

// Truncated Leslie kernels: closed-form admissible triplets, condition
// audits, and the explicit family whose coupling coefficient vanishes.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kprod/doeblin.hpp"
#include "kprod/environment.hpp"
#include "kprod/operator.hpp"

namespace kprod {

/// First column f, superdiagonal s, s[K-1] forced to 0. Throws
/// AssumptionViolation when some f[x] + s[x] = 0.
Kernel build_leslie(std::vector<double> f, std::vector<double> s);

/// c = (1 + max_x s_x / f_x)^{-1} = min_x f_x / (f_x + s_x); 0 as soon as
/// some fertility vanishes.
double leslie_c(const Kernel& leslie);

struct SupResult {
  double value = 1.0;  ///< +inf sentinel when a zero denominator is hit
  bool unbounded_suspect = false;
  bool exact = false;  ///< true when an exact closed-form bound was used
  std::optional<std::size_t> witness_k;
  std::optional<std::size_t> witness_x;
};

/// sup over samples k and x <= y of f_y^k / f_x^k.
SupResult d_prime(const std::vector<std::vector<double>>& fertilities);
/// Same, over the Leslie kernels of a window.
SupResult d_prime(const std::vector<Kernel>& kernels);

/// sup over x and k < kernels.size() of
///   (s_x^0 ... s_{x+k}^k) / (s_0^0 ... s_k^k),
/// computed in log space; kernels[k] supplies s^k. When every s is
/// nonincreasing from some x0 on, the closed-form bound is also evaluated
/// and reported with exact = true.
SupResult d_double_prime(const std::vector<Kernel>& kernels);

struct LeslieTriplet {
  AdmissibleTriplet triplet;  ///< nu = delta_0, c and d from the closed forms
  double d_prime = 1.0;
  double d_double_prime = 1.0;
  double certified_c = 0.0;  ///< max_c(M_0, delta_0)
  double certified_d = 0.0;  ///< d_horizon(delta_0) on the same kernels
  bool certificate_ok = false;
};

/// Closed-form triplet at time 0 from M_0 and the future M_1..M_{horizon},
/// re-verified against max_c and d_horizon.
LeslieTriplet leslie_triplet(EnvironmentStream stream, std::size_t horizon);

struct ConditionVerdict {
  std::string name;
  bool pass = false;
  bool exact = true;
  std::string note;
};

struct LeslieAudit {
  std::vector<ConditionVerdict> conditions;  ///< i) .. vi)
  double prob_gamma_positive = 0.0;
  double min_d_horizon = 1.0;
  bool gamma_zero_suspect = false;
  bool assumption2 = false, assumption3 = false, assumption4 = false, assumption4_plus = false;
};

/// Per-condition verdicts over the family of a Leslie environment. d''
/// enters only through horizon-bounded evaluation along `samples` sampled
/// trajectories of length `horizon`.
LeslieAudit audit_conditions(const EnvironmentSpec& spec, std::size_t samples,
                             std::size_t horizon, unsigned threads = 1);

struct Counterexample {
  double a = 9.0;
  double delta = 0.1;
  std::size_t K = 0;
  std::vector<int> eps;  ///< 0/1 marks
  double alpha = 0.0;    ///< max prefix density of ones
  double c = 0.0;        ///< (1 + sup s/f)^{-1} = delta
  double growth = 0.0;   ///< a^{1-alpha} (1-c) / 2
  std::size_t longest_run = 0;
  Kernel kernel = Kernel::identity(1);
};

/// Marks 0^{j^2} 1^{j}, j = 1, 2, ..., cut at length K.
std::vector<int> squared_blocks(std::size_t K);
/// Smallest K holding the run of length n from squared_blocks.
std::size_t squared_blocks_length(std::size_t n);

/// Constant Leslie kernel with f = delta m, s = (1 - delta) m,
/// m(x) = 1 + (a - 1) eps_x. Rejects marks whose prefix density reaches 1
/// or does not decrease by the end.
Counterexample build_counterexample(double a, double delta, std::vector<int> eps);

struct CounterexampleRow {
  std::size_t n;
  double lhs_log_ratio;  ///< log(||m_{0,n}||_inf / m_{0,n}(0))
  double rhs_log_bound;  ///< n log(growth)
};

struct CounterexampleReport {
  bool criterion_met = false;  ///< growth > 1
  std::vector<CounterexampleRow> rows;
  bool divergence_verified = false;
  double d_at_horizon = 1.0;
  std::size_t d_horizon_used = 0;
  std::vector<double> d_series;  ///< d_horizon for N_max = 1..horizon
};

/// Checks lhs >= rhs - 1e-9 for n <= n_verify and evaluates d_horizon(delta_0)
/// up to d_horizon_max.
CounterexampleReport verify_counterexample(const Counterexample& ce, std::size_t n_verify,
                                           std::size_t d_horizon_max);

}  // namespace kprod
