#pragma once

// Uniform positivity, Hilbert projective distance and the Birkhoff
// coefficient, Hennion-style lower bounds on d, and the discretized
// spatial-population kernel.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kprod/doeblin.hpp"
#include "kprod/environment.hpp"
#include "kprod/operator.hpp"

namespace kprod {

struct UniformPositivityCertificate {
  bool flag = false;
  std::vector<double> h;  ///< Q 1 when flagged
  double K = 0.0;         ///< +inf when not flagged
  bool sandwich_ok = false;
};

/// All entries positive; then h = Q1 and for every basis function e_y,
/// K^{-1} b h <= Q e_y <= K b h with b the geometric mean of the extreme
/// ratios (Q e_y)(x) / h(x).
UniformPositivityCertificate is_uniformly_positive(const Kernel& q);

/// min_z min_y M(y,z) / max_x M(x,z) for M = M_{b,b+k-1} (the first k-1
/// kernels of the window, b = window.begin()). Lower bound for
/// nu(m_{b,n}) / |||M_{b,n}||| at every n >= k. Zero when a column of the
/// product has a zero entry.
double hennion_d_bound(const ProductWindow& window, std::size_t k);

/// log(max_i u_i/v_i * max_j v_j/u_j); +inf unless both are positive.
double hilbert_distance(const std::vector<double>& u, const std::vector<double>& v);
double hilbert_distance(const Measure& u, const Measure& v);

/// tau = (1 - sqrt(phi)) / (1 + sqrt(phi)), phi the minimal cross ratio
/// Q(x,z)Q(y,w) / (Q(y,z)Q(x,w)). Returns 1 when some entry vanishes.
double birkhoff_coefficient(const Kernel& q);

/// Largest (1/2) ||P(x,.) - P(x',.)||_1 over row pairs of the auxiliary
/// operator, i.e. its exact TV contraction factor.
double dobrushin_coefficient(const std::vector<double>& row_major, std::size_t p);

struct DiscretizedExample {
  EnvironmentSpec spec = EnvironmentSpec::constant(Kernel::identity(1));
  Kernel kernel = Kernel::identity(1);
  AdmissibleTriplet triplet;  ///< nu uniform, c = 1/K, d = mean(m) / (K^4 max m)
  double K = 0.0;
  double certified_c = 0.0;
  double certified_d = 0.0;
  bool certificate_ok = false;
};

/// M(x,y) = m(x) Q(x,y) / n on the midpoint grid of [0,1], Q normalized so
/// every row averages to 1. Throws InvalidInput when Q is not positive on
/// the grid or m is not positive.
DiscretizedExample discretize_kernel_example(std::size_t grid_n,
                                             const std::function<double(double)>& m_func,
                                             const std::function<double(double, double)>& q_func,
                                             std::size_t d_horizon_max = 64);

struct LesliePatternReport {
  std::size_t p = 0;
  std::size_t n = 0;
  std::size_t zero_entries = 0;
  bool matches_prediction = false;  ///< nonzero iff y == x + n or y < n
  bool uniformly_positive = false;
};

/// Zero pattern of M_0 ... M_{n-1} for Leslie kernels with positive f and
/// s_x > 0 for x < p - 1.
LesliePatternReport leslie_pattern(const std::vector<Kernel>& kernels);

struct ComparisonRow {
  std::size_t instance_id = 0;
  double gamma = 0.0;
  double one_minus_gamma = 1.0;
  double tau_birkhoff = 1.0;
  double observed_tv_factor = 0.0;
  double observed_hilbert_factor = 0.0;
  double hennion_bound = 0.0;
  double d_horizon_min = 1.0;  ///< smallest d_horizon(n_min = k) over N_max
  bool tv_ok = false;
  bool hilbert_ok = false;
  bool hennion_ok = false;
};

struct ComparisonOptions {
  std::size_t instances = 200;
  std::size_t p = 4;
  std::size_t window = 8;   ///< kernels per instance
  std::size_t k = 3;        ///< Hennion product length
  std::size_t pairs = 32;   ///< random pairs for the Hilbert factor
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Random entrywise-positive instances; per instance the doeblin gamma at
/// time 0, the Dobrushin factor of P_{0,1}^N, the Birkhoff tau of M_0 and
/// the largest observed Hilbert contraction over random positive pairs.
std::vector<ComparisonRow> hilbert_comparison(const ComparisonOptions& opt);

}  // namespace kprod
