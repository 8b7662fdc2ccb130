#pragma once

// Auxiliary conservative operators P_{k,n}^N and brute-force checks of the
// minoration and contraction inequalities they carry.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kprod/doeblin.hpp"
#include "kprod/operator.hpp"
#include "kprod/rng.hpp"

namespace kprod {

/// Slack tolerated when comparing against an analytic inequality.
inline constexpr double kIneqSlack = 1e-12;

struct AuxiliaryOperator {
  std::size_t p = 0;
  std::size_t k = 0, n = 0, N = 0;
  std::vector<double> values;  ///< row-major, rows sum to 1

  double operator()(std::size_t x, std::size_t y) const { return values[x * p + y]; }
  Measure row(std::size_t x) const;
  /// rho P for a signed measure rho.
  Measure apply(const Measure& rho) const;
};

/// P(x,y) = m_{n,N}(y) M_{k,n}(x,y) / m_{k,N}(x), evaluated in log form.
AuxiliaryOperator aux_P(const ProductWindow& window, std::size_t k, std::size_t n,
                        std::size_t N);

/// Entrywise product of two auxiliary operators (for the factorization check).
AuxiliaryOperator operator*(const AuxiliaryOperator& a, const AuxiliaryOperator& b);

/// Outcome of one inequality lhs <= rhs. slack = rhs - lhs.
struct InequalityReport {
  std::string check;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = true;
  std::size_t witness_x = 0;
  std::size_t witness_y = 0;
};

/// delta_x P_{n,n+1}^N >= gamma_n nu_{n,N} entrywise, where
/// nu_{n,N}(y) = nu_n(y) m_{n+1,N}(y) / nu_n(m_{n+1,N}). Reports the worst
/// entry; lhs/rhs are that entry's two sides.
InequalityReport check_doeblin_minoration(const ProductWindow& window, std::size_t n,
                                          std::size_t N, const AdmissibleTriplet& triplet);

/// ||mu1 . M_{k,n} - mu2 . M_{k,n}||_TV <= 2 prod_{i=k}^{n-1} (1 - gamma_i).
/// `gammas` is indexed by absolute time.
InequalityReport projective_contraction_check(const ProductWindow& window, const Measure& mu1,
                                              const Measure& mu2, std::size_t k,
                                              std::size_t n, std::span<const double> gammas);

/// gamma_{n-1} |a1 - a2| <= 2 a2 prod_{i=k}^{n-1} (1 - gamma_i) with
/// a_j = mu_j(m_{k,N}) / mu_j(m_{k,n}). Both sides are reported divided by
/// a2, which keeps them finite when masses grow exponentially.
InequalityReport growth_ratio_check(const ProductWindow& window, const Measure& mu1,
                                    const Measure& mu2, std::size_t k, std::size_t n,
                                    std::size_t N, std::span<const double> gammas);

struct SandwichReport {
  double log_lower = 0.0;   ///< log(gamma_k ||mu M_{0,k+1}|| |||M_{k+1,n}|||)
  double log_middle = 0.0;  ///< log ||mu M_{0,n}||
  double log_upper = 0.0;   ///< log(||mu M_{0,k+1}|| |||M_{k+1,n}|||)
  bool pass = true;
};

/// gamma_k ||mu M_{0,k+1}|| |||M_{k+1,n}||| <= ||mu M_{0,n}||
///   <= ||mu M_{0,k+1}|| |||M_{k+1,n}|||, in log space.
/// The window must start at time 0.
SandwichReport sandwich_gamma_check(const ProductWindow& window, const Measure& mu,
                                    std::size_t k, std::size_t n, double gamma_k);

/// ||rho P_{k,n}^N||_TV <= prod_{i=k}^{n-1} (1 - gamma_i) ||rho||_TV for a
/// zero-mass signed measure rho.
InequalityReport tv_contraction_check(const ProductWindow& window, const Measure& rho,
                                      std::size_t k, std::size_t n, std::size_t N,
                                      std::span<const double> gammas);

/// p x p kernels with entries exp(U(-2,2)); each entry is zeroed with
/// probability zero_prob, keeping at least one positive entry per row.
std::vector<Kernel> random_window(std::size_t p, std::size_t length, Engine& g,
                                  double zero_prob = 0.0);

/// Random probability vector with full support.
Measure random_measure(std::size_t p, Engine& g);

struct SuiteRecord {
  std::size_t instance = 0;
  std::size_t k = 0, n = 0, N = 0;
  InequalityReport report;
};

/// Every inequality above on one window starting at time 0, at randomly
/// drawn 0 <= k < n < N = window end, with gammas from triplet_at. The
/// sandwich is reported as two records (lower and upper side, in logs).
std::vector<SuiteRecord> inequality_suite(const ProductWindow& window, std::size_t instance,
                                          std::uint64_t seed);

}  // namespace kprod
