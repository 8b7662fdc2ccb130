#pragma once

// Estimators for the long-time behaviour of mu M_{0,n}: the eigenfunction h,
// the rank-one approximation error, samples from the stationary projective
// law Lambda, and the Lyapunov exponent by three routes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kprod/environment.hpp"
#include "kprod/operator.hpp"

namespace kprod {

struct HEstimate {
  std::vector<double> values;  ///< h(x) / h(anchor)
  std::size_t anchor = 0;
  double envelope = 0.0;  ///< Delta_{k,n}/2 bound on relative ratio error, +inf if undefined
  std::size_t n_used = 0;
  bool converged = false;
  double eps = 0.0;  ///< threshold used for tau_n^eps
};

struct HOptions {
  double tol = 1e-10;
  std::size_t n_max = 2000;
  std::optional<std::size_t> anchor;  ///< default: argmax of m_{k,n} at stop
  std::optional<double> eps;          ///< default: 25th percentile of positive gammas
  std::size_t d_horizon = 64;         ///< look-ahead used to certify each d_i
};

/// h_k(x) ~ m_{k,n}(x) / m_{k,n}(x0), stopped at the first n where the
/// envelope Delta_{k,n}^eps / 2 drops below tol. `stream` is positioned at
/// time 0. Throws NoCoupling when every gamma up to n_max vanishes.
HEstimate estimate_h(const EnvironmentStream& stream, std::size_t k, const HOptions& opt = {});

struct ApproxPoint {
  std::size_t n;
  double log_error;  ///< log of ||mu1 M - (mu1(h)/mu2(h)) mu2 M|| / ||mu1 M||
};

struct ApproxReport {
  std::vector<ApproxPoint> points;
  double ratio_h = 0.0;  ///< mu1(h) / mu2(h)
  double fitted_rate = 0.0;
  std::optional<std::size_t> crossover;  ///< first n with error <= delta^m for all m >= n
  bool pass = false;
};

/// Relative error of the rank-one approximation for n in [n_first, n_last].
/// The signed measure rho = mu1 - a mu2 with a = mu1(h)/mu2(h) is carried
/// separately from the positive chain, and its component along the
/// Perron direction (rho(h_n) = 0 in exact arithmetic) is projected out
/// after every step so round-off does not masquerade as error.
ApproxReport check_uniform_approx(const EnvironmentStream& stream, const Measure& mu1,
                                  const Measure& mu2, double delta, std::size_t n_first,
                                  std::size_t n_last, std::size_t tail = 400);

enum class LyapunovMethod { sequential, kingman, integral };

std::string to_string(LyapunovMethod m);

struct LyapunovEstimate {
  double value = 0.0;
  double std_error = 0.0;  ///< 0 for a single deterministic trajectory
  LyapunovMethod method = LyapunovMethod::sequential;
  std::size_t n = 0;
  std::size_t replicas = 1;
};

struct Trajectory {
  std::vector<double> increments;  ///< log ||mu_k M_k||
  Measure final_measure;
  double log_norm = 0.0;  ///< log ||mu M_{0,n}||
};

/// Projective chain mu_k with its log-norm increments.
Trajectory run_trajectory(EnvironmentStream stream, const Measure& mu, std::size_t n,
                          bool keep_increments = false);

/// (1/n) sum log ||mu_k M_k|| along one trajectory.
LyapunovEstimate lyapunov_sequential(const EnvironmentStream& stream, const Measure& mu,
                                     std::size_t n);

/// Mean of the sequential estimate over replicas with derived seeds.
LyapunovEstimate lyapunov_sequential(const EnvironmentSpec& spec, const Measure& mu,
                                     std::size_t n, std::size_t replicas, unsigned threads = 1);

/// min over N <= N_max of mean (1/N) log |||M_{0,N}||| across replicas.
LyapunovEstimate lyapunov_kingman(const EnvironmentSpec& spec, std::size_t N_max,
                                  std::size_t replicas, unsigned threads = 1);

struct ProjectiveSample {
  Measure measure;
  std::size_t depth = 0;
  double tv_increment = 0.0;
  bool converged = false;
  std::vector<double> increments;  ///< TV increment after each prepend
};

/// Backward products mu . (M_{-n} ... M_{-1}), one per replica, stopped when
/// the increment between successive prepends and the spread between the rows
/// of the product are both below tol, so the result does not depend on mu. Requires an
/// i.i.d. spec (throws InvalidInput otherwise).
std::vector<ProjectiveSample> sample_stationary(const EnvironmentSpec& spec, double tol,
                                                std::size_t n_max, std::size_t replicas,
                                                unsigned threads = 1,
                                                std::optional<Measure> start = std::nullopt);

/// Forward law of mu . M_{0,n} per replica; valid in distribution for any
/// stationary spec.
std::vector<Measure> sample_forward(const EnvironmentSpec& spec, std::size_t n,
                                    std::size_t replicas, unsigned threads = 1,
                                    std::optional<Measure> start = std::nullopt);

/// Mean of log ||mu M|| over Lambda samples mu and fresh kernel draws M.
LyapunovEstimate lyapunov_integral(const EnvironmentSpec& spec,
                                   const std::vector<Measure>& lambda_samples,
                                   std::size_t draws_per_sample = 1);

struct InvarianceReport {
  double statistic = 0.0;  ///< energy distance in TV geometry
  double p_value = 1.0;
  std::size_t n_before = 0;
  std::size_t n_after = 0;
};

/// Compares samples with samples pushed one random projective step. The
/// two groups are disjoint halves, so the permutation null is exact.
InvarianceReport invariance_check(const EnvironmentSpec& spec,
                                  const std::vector<Measure>& lambda_samples,
                                  std::size_t permutations = 199,
                                  std::size_t max_points = 1000);

/// Energy-distance two-sample permutation test under the TV metric.
InvarianceReport energy_test(const std::vector<Measure>& a, const std::vector<Measure>& b,
                             std::size_t permutations, std::uint64_t seed);

/// Least-squares slope of log_y against n, returned as exp(slope).
/// Non-finite points are skipped; returns 0 when fewer than two remain.
double fitted_geometric_rate(const std::vector<double>& n, const std::vector<double>& log_y);

}  // namespace kprod
