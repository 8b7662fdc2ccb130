#include "kprod/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kprod/contraction.hpp"
#include "kprod/parallel.hpp"
#include "kprod/rng.hpp"

namespace kprod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSandwichTol = 1e-12;

}  // namespace

UniformPositivityCertificate is_uniformly_positive(const Kernel& q) {
  UniformPositivityCertificate c;
  c.K = kInf;
  if (!q.all_positive()) return c;
  const std::size_t p = q.size();
  c.flag = true;
  c.h.resize(p);
  for (std::size_t x = 0; x < p; ++x) c.h[x] = q.row_sum(x);

  double log_k = 0.0;
  std::vector<double> lo(p), hi(p);
  for (std::size_t y = 0; y < p; ++y) {
    lo[y] = kInf;
    hi[y] = -kInf;
    for (std::size_t x = 0; x < p; ++x) {
      const double r = std::log(q(x, y)) - std::log(c.h[x]);
      lo[y] = std::min(lo[y], r);
      hi[y] = std::max(hi[y], r);
    }
    log_k = std::max(log_k, 0.5 * (hi[y] - lo[y]));
  }
  c.K = std::exp(log_k);

  c.sandwich_ok = true;
  for (std::size_t y = 0; y < p; ++y) {
    const double b = std::exp(0.5 * (hi[y] + lo[y]));
    for (std::size_t x = 0; x < p; ++x) {
      const double v = q(x, y);
      const double scale = b * c.h[x];
      if (v < scale / c.K * (1.0 - kSandwichTol) || v > scale * c.K * (1.0 + kSandwichTol)) {
        c.sandwich_ok = false;
      }
    }
  }
  return c;
}

double hennion_d_bound(const ProductWindow& window, std::size_t k) {
  if (k < 1) throw InvalidInput("hennion_d_bound: k must be >= 1");
  const std::size_t b = window.begin();
  const LogMatrix m = window.product(b, b + k - 1);
  const std::size_t p = window.dim();
  double log_bound = 0.0;
  for (std::size_t z = 0; z < p; ++z) {
    double lo = kInf, hi = -kInf;
    for (std::size_t x = 0; x < p; ++x) {
      const double v = m.log_entry(x, z);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == -kInf) return 0.0;
    log_bound = std::min(log_bound, lo - hi);
  }
  return std::exp(log_bound);
}

double hilbert_distance(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw DimensionError("hilbert_distance: sizes differ");
  double up = -kInf, down = -kInf;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0) || !(v[i] > 0.0)) return kInf;
    const double r = std::log(u[i]) - std::log(v[i]);
    up = std::max(up, r);
    down = std::max(down, -r);
  }
  return u.empty() ? 0.0 : up + down;
}

double hilbert_distance(const Measure& u, const Measure& v) {
  return hilbert_distance(u.weights(), v.weights());
}

double birkhoff_coefficient(const Kernel& q) {
  if (!q.all_positive()) return 1.0;
  const std::size_t p = q.size();
  double log_phi = 0.0;
  for (std::size_t x = 0; x < p; ++x) {
    for (std::size_t y = x + 1; y < p; ++y) {
      for (std::size_t z = 0; z < p; ++z) {
        for (std::size_t w = z + 1; w < p; ++w) {
          const double cross = std::log(q(x, z)) + std::log(q(y, w)) - std::log(q(y, z)) -
                               std::log(q(x, w));
          log_phi = std::min(log_phi, -std::abs(cross));
        }
      }
    }
  }
  const double s = std::exp(0.5 * log_phi);
  return (1.0 - s) / (1.0 + s);
}

double dobrushin_coefficient(const std::vector<double>& row_major, std::size_t p) {
  if (row_major.size() != p * p) throw DimensionError("dobrushin_coefficient: bad size");
  double worst = 0.0;
  for (std::size_t x = 0; x < p; ++x) {
    for (std::size_t x2 = x + 1; x2 < p; ++x2) {
      double acc = 0.0;
      for (std::size_t y = 0; y < p; ++y) {
        acc += std::abs(row_major[x * p + y] - row_major[x2 * p + y]);
      }
      worst = std::max(worst, 0.5 * acc);
    }
  }
  return worst;
}

DiscretizedExample discretize_kernel_example(std::size_t grid_n,
                                             const std::function<double(double)>& m_func,
                                             const std::function<double(double, double)>& q_func,
                                             std::size_t d_horizon_max) {
  if (grid_n < 1) throw InvalidInput("discretize_kernel_example: grid_n must be >= 1");
  const std::size_t n = grid_n;
  const double h = 1.0 / static_cast<double>(n);
  std::vector<double> mid(n), m(n), q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    mid[i] = (static_cast<double>(i) + 0.5) * h;
    m[i] = m_func(mid[i]);
    if (!(m[i] > 0.0) || !std::isfinite(m[i])) {
      throw InvalidInput("discretize_kernel_example: m must be positive on the grid");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double avg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = q_func(mid[i], mid[j]);
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidInput("discretize_kernel_example: Q must be positive on the grid");
      }
      q[i * n + j] = v;
      avg += v * h;
    }
    for (std::size_t j = 0; j < n; ++j) q[i * n + j] /= avg;
  }
  const auto [qmin, qmax] = std::minmax_element(q.begin(), q.end());
  DiscretizedExample ex;
  ex.K = std::max(1.0 / *qmin, *qmax);

  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m[i] * q[i * n + j] * h;
  }
  ex.kernel = Kernel::dense(n, std::move(a));
  ex.spec = EnvironmentSpec::constant(ex.kernel);

  double mean_m = 0.0;
  for (double v : m) mean_m += v * h;
  const double max_m = *std::max_element(m.begin(), m.end());

  auto& t = ex.triplet;
  t.nu = Measure::uniform(n);
  t.c = 1.0 / ex.K;
  t.d = mean_m / (std::pow(ex.K, 4) * max_m);
  t.gamma = t.c * t.d;
  t.horizon = kUnboundedHorizon;
  t.provenance = Provenance::exact;

  ex.certified_c = max_c(ex.kernel, t.nu);
  ex.certified_d = d_horizon(t.nu, EnvironmentStream(ex.spec), d_horizon_max).d;
  const double tol = 1e-12;
  ex.certificate_ok = t.c <= ex.certified_c + tol && t.d <= ex.certified_d + tol;
  return ex;
}

LesliePatternReport leslie_pattern(const std::vector<Kernel>& kernels) {
  if (kernels.empty()) throw InvalidInput("leslie_pattern: need at least one kernel");
  LesliePatternReport r;
  r.p = kernels.front().size();
  r.n = kernels.size();
  for (const auto& k : kernels) {
    if (!k.is_leslie() || k.size() != r.p) throw InvalidInput("leslie_pattern: expected Leslie kernels");
    for (std::size_t x = 0; x < r.p; ++x) {
      if (!(k.fertility()[x] > 0.0) || (x + 1 < r.p && !(k.survival()[x] > 0.0))) {
        throw InvalidInput("leslie_pattern: needs f > 0 and s_x > 0 for x < p - 1");
      }
    }
  }
  // Boolean product: a zero of the floating-point product could also come
  // from underflow, so the pattern is propagated symbolically.
  const std::size_t p = r.p;
  std::vector<char> reach(p * p, 0);
  for (std::size_t x = 0; x < p; ++x) reach[x * p + x] = 1;
  for (const auto& k : kernels) {
    std::vector<char> next(p * p, 0);
    for (std::size_t x = 0; x < p; ++x) {
      for (std::size_t z = 0; z < p; ++z) {
        if (!reach[x * p + z]) continue;
        for (std::size_t y = 0; y < p; ++y) {
          if (k(z, y) > 0.0) next[x * p + y] = 1;
        }
      }
    }
    reach.swap(next);
  }
  r.matches_prediction = true;
  for (std::size_t x = 0; x < p; ++x) {
    for (std::size_t y = 0; y < p; ++y) {
      const bool nonzero = reach[x * p + y] != 0;
      if (!nonzero) ++r.zero_entries;
      const bool predicted = y == x + r.n || y < r.n;
      if (nonzero != predicted) r.matches_prediction = false;
    }
  }
  r.uniformly_positive = r.zero_entries == 0;
  return r;
}

std::vector<ComparisonRow> hilbert_comparison(const ComparisonOptions& opt) {
  if (opt.p < 2 || opt.window < opt.k || opt.k < 1) {
    throw InvalidInput("hilbert_comparison: need p >= 2 and 1 <= k <= window");
  }
  std::vector<ComparisonRow> rows(opt.instances);
  parallel_for(opt.instances, opt.threads, [&](std::size_t i) {
    Engine g(derive_seed(opt.seed, i, "hilbert"));
    const std::vector<Kernel> kernels = random_window(opt.p, opt.window, g);
    const ProductWindow window(kernels, 0);
    const Kernel& q = window.kernel(0);

    ComparisonRow& row = rows[i];
    row.instance_id = i;
    const AdmissibleTriplet t = triplet_at(window, 0);
    row.gamma = t.gamma;
    row.one_minus_gamma = 1.0 - t.gamma;
    row.tau_birkhoff = birkhoff_coefficient(q);

    const AuxiliaryOperator P = aux_P(window, 0, 1, window.end());
    row.observed_tv_factor = dobrushin_coefficient(P.values, opt.p);

    for (std::size_t j = 0; j < opt.pairs; ++j) {
      const Measure a = random_measure(opt.p, g);
      const Measure b = random_measure(opt.p, g);
      const double before = hilbert_distance(a, b);
      if (!(before > 0.0)) continue;
      const double after = hilbert_distance(act_left(a, q), act_left(b, q));
      row.observed_hilbert_factor = std::max(row.observed_hilbert_factor, after / before);
    }

    // The dominance check runs on the shifted window M_1, M_2, ...
    const ProductWindow future(std::vector<Kernel>(kernels.begin() + 1, kernels.end()), 1);
    row.hennion_bound = hennion_d_bound(future, opt.k);
    for (std::size_t n_max = opt.k; n_max <= future.end(); ++n_max) {
      const double d = d_horizon(t.nu, future, 1, n_max, opt.k).d;
      row.d_horizon_min = std::min(row.d_horizon_min, d);
    }
    row.tv_ok = row.observed_tv_factor <= row.one_minus_gamma + 1e-9;
    row.hilbert_ok = row.observed_hilbert_factor <= row.tau_birkhoff + 1e-9;
    row.hennion_ok = row.hennion_bound <= row.d_horizon_min + 1e-12;
  });
  return rows;
}

}  // namespace kprod
