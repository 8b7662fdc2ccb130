#pragma once

// Diagnostics for the critical case lambda = 0: oscillation of
// S_n = log ||mu M_{0,n}|| and a heuristic null-homology detector.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kprod/environment.hpp"
#include "kprod/operator.hpp"

namespace kprod {

/// Kernels scaled by exp(-lambda_hat).
EnvironmentSpec center_environment(const EnvironmentSpec& spec, double lambda_hat);

enum class OscVerdict { oscillating, one_sided, bounded };

std::string to_string(OscVerdict v);

struct OscillationReport {
  double max_s = 0.0;
  double min_s = 0.0;
  double final_s = 0.0;
  std::optional<std::size_t> first_up;    ///< first n with S_n >= threshold
  std::optional<std::size_t> first_down;  ///< first n with S_n <= -threshold
  double max_dev_after_reference = 0.0;   ///< max |S_n - S_ref| over n >= ref
  OscVerdict verdict = OscVerdict::bounded;
};

/// Runs S_n for n = 1..n. `reference_n` (0 = off) selects the index from
/// which the deviation max |S_n - S_ref| is tracked.
OscillationReport oscillation_stats(EnvironmentStream stream, const Measure& mu, std::size_t n,
                                    double threshold = 5.0, std::size_t reference_n = 0);

/// Verdict for an arbitrary log series S_1..S_n (index i holds S_{i+1}).
OscillationReport classify_series(const std::vector<double>& s, double threshold,
                                  std::size_t reference_n = 0);

enum class NhVerdict { consistent, rejected, inconclusive };

std::string to_string(NhVerdict v);

struct NhReport {
  NhVerdict verdict = NhVerdict::inconclusive;
  double spread_exponent = 0.0;  ///< fitted d log(spread) / d log(n)
  std::vector<std::size_t> checkpoints;
  std::vector<double> spreads;  ///< mean |S_i - S_j| over TV-close pairs
  std::vector<std::size_t> close_pairs;
};

/// Heuristic: among replicas whose mu_n are within match_tol in TV, does
/// the spread of S_n stay bounded (consistent with null homology) or grow
/// like a power of n (rejected)? Exponent threshold 0.25.
NhReport nh_diagnostic(const EnvironmentSpec& spec, std::size_t replicas, std::size_t n,
                       double match_tol, unsigned threads = 1, std::size_t min_pairs = 10);

struct ZeroOneReport {
  std::vector<std::vector<OscVerdict>> verdicts;  ///< [seed][measure]
  std::vector<OscVerdict> norm_verdicts;          ///< from log |||M_{1,n}|||
  std::size_t agreeing_seeds = 0;
  bool pass = false;
};

/// For each replica seed, oscillation verdicts of every starting measure
/// and of the operator-norm series must coincide.
ZeroOneReport zero_one_check(const EnvironmentSpec& spec, const std::vector<Measure>& measures,
                             std::size_t n, std::size_t replicas, double threshold = 5.0,
                             unsigned threads = 1);

}  // namespace kprod
