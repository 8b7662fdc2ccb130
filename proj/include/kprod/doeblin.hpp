#pragma once

// Admissible triplets (nu, c, d) and the coefficient series built from
// gamma = c * d.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kprod/environment.hpp"
#include "kprod/operator.hpp"

namespace kprod {

enum class Provenance { exact, horizon_bounded, leslie_closed_form };

std::string to_string(Provenance p);

struct AdmissibleTriplet {
  Measure nu;
  double c = 0.0;
  double d = 0.0;
  double gamma = 0.0;
  std::size_t horizon = 0;  ///< d certified for m_{1,n}, 1 <= n <= horizon
  Provenance provenance = Provenance::horizon_bounded;
};

/// Largest c in [0,1] with M(x,y) >= c m(x) nu(y) for all x, y.
/// Throws AssumptionViolation when M has a zero row.
double max_c(const Kernel& m, const Measure& nu);

struct DResult {
  double d = 1.0;
  std::size_t horizon = 0;
};

/// min over 1 <= n <= n_max of nu(m_{1,n}) / |||M_{1,n}|||, where M_{1,n} is
/// the product of the first n-1 kernels of `future` (so m_{1,1} = 1).
/// Only horizons n >= n_min enter the minimum.
DResult d_horizon(const Measure& nu, const ProductWindow& future, std::size_t start,
                  std::size_t n_max, std::size_t n_min = 1);
/// Same, reading M_1, M_2, ... from a stream positioned at time 1.
DResult d_horizon(const Measure& nu, EnvironmentStream stream_at_1, std::size_t n_max);

inline constexpr std::size_t kUnboundedHorizon = static_cast<std::size_t>(-1);

/// Triplet for step n of `window`, with d certified against the future
/// products M_{n+1,N} for N up to min(window end, n + max_horizon). Without
/// nu, scans Diracs, uniform and normalized column maxima and keeps the
/// largest gamma.
AdmissibleTriplet triplet_at(const ProductWindow& window, std::size_t n,
                             const std::optional<Measure>& nu = std::nullopt,
                             std::size_t max_horizon = kUnboundedHorizon);

/// gamma_i for i in [first, last), each from triplet_at on `window`.
std::vector<double> gamma_series(const ProductWindow& window, std::size_t first,
                                 std::size_t last,
                                 const std::optional<Measure>& nu = std::nullopt,
                                 std::size_t max_horizon = kUnboundedHorizon);

/// exp(mean log(1 - gamma)); 0 when some gamma equals 1.
double gamma_bar(std::span<const double> gammas);

/// max{ i <= n : gamma_{i-1} >= eps }, or nullopt for the empty set.
std::optional<std::size_t> tau_eps(std::span<const double> gammas, std::size_t n, double eps);

/// (1/gamma_{n-1}) prod_{i=k}^{n-1} (1 - gamma_i); +inf when gamma_{n-1} = 0.
double Gamma(std::size_t k, std::size_t n, std::span<const double> gammas);

/// 8 G / (1 - 2 G) with G = Gamma(k, tau_eps(n)); nullopt when tau is
/// undefined, tau <= k, or 2 G >= 1.
std::optional<double> Delta(std::size_t k, std::size_t n, double eps,
                            std::span<const double> gammas);

}  // namespace kprod
