#include "kprod/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kprod/doeblin.hpp"
#include "kprod/parallel.hpp"
#include "kprod/rng.hpp"

namespace kprod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return r;
}

double quantile_of_positive(const std::vector<double>& v, double q) {
  std::vector<double> pos;
  for (double x : v) {
    if (x > 0.0) pos.push_back(x);
  }
  if (pos.empty()) return 0.0;
  std::sort(pos.begin(), pos.end());
  const auto idx = static_cast<std::size_t>(q * static_cast<double>(pos.size() - 1));
  return pos[idx];
}

// Largest TV distance between normalized nonzero rows. Once it is below tol,
// mu * prod agrees within tol for every start mu.
double row_spread(const LogMatrix& prod) {
  const std::size_t p = prod.p;
  std::vector<std::vector<double>> rows;
  for (std::size_t x = 0; x < p; ++x) {
    double sum = 0.0;
    for (std::size_t y = 0; y < p; ++y) sum += prod.values[x * p + y];
    if (!(sum > 0.0)) continue;
    std::vector<double> row(prod.values.begin() + static_cast<long>(x * p),
                            prod.values.begin() + static_cast<long>((x + 1) * p));
    for (double& v : row) v /= sum;
    rows.push_back(std::move(row));
  }
  double worst = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double d = 0.0;
    for (std::size_t y = 0; y < p; ++y) d += std::abs(rows[i][y] - rows[0][y]);
    worst = std::max(worst, 0.5 * d);
  }
  return worst;
}

Measure start_or_uniform(const std::optional<Measure>& start, std::size_t p) {
  if (!start) return Measure::uniform(p);
  if (start->size() != p) throw DimensionError("start measure has the wrong size");
  return start->normalized();
}

// Row sums of a log matrix, as a log vector.
LogVector row_sums(const LogMatrix& m) {
  LogVector v{std::vector<double>(m.p, 0.0), m.log_scale};
  for (std::size_t x = 0; x < m.p; ++x) {
    const double* row = m.values.data() + x * m.p;
    v.values[x] = std::accumulate(row, row + m.p, 0.0);
  }
  v.renormalize();
  return v;
}

// mu X normalized, for a log matrix X.
Measure left_apply_normalized(const Measure& mu, const LogMatrix& x) {
  const std::size_t p = x.p;
  Measure out(p);
  for (std::size_t r = 0; r < p; ++r) {
    if (mu[r] == 0.0) continue;
    const double* row = x.values.data() + r * p;
    for (std::size_t y = 0; y < p; ++y) out[y] += mu[r] * row[y];
  }
  const double total = out.mass();
  if (!(total > 0.0)) throw MassAnnihilated();
  for (std::size_t y = 0; y < p; ++y) out[y] /= total;
  return out;
}

}  // namespace

std::string to_string(LyapunovMethod m) {
  switch (m) {
    case LyapunovMethod::sequential: return "sequential";
    case LyapunovMethod::kingman: return "kingman";
    case LyapunovMethod::integral: return "integral";
  }
  return "unknown";
}

double fitted_geometric_rate(const std::vector<double>& n, const std::vector<double>& log_y) {
  if (n.size() != log_y.size()) throw DimensionError("fitted_geometric_rate: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!std::isfinite(log_y[i])) continue;
    sx += n[i];
    sy += log_y[i];
    sxx += n[i] * n[i];
    sxy += n[i] * log_y[i];
    ++m;
  }
  if (m < 2) return 0.0;
  const double mm = static_cast<double>(m);
  const double denom = mm * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return std::exp((mm * sxy - sx * sy) / denom);
}

HEstimate estimate_h(const EnvironmentStream& stream, std::size_t k, const HOptions& opt) {
  if (!(opt.tol > 0.0)) throw InvalidInput("estimate_h: tol must be positive");
  if (opt.n_max < 1) throw InvalidInput("estimate_h: n_max must be >= 1");
  EnvironmentStream s(stream);
  const std::size_t total = k + opt.n_max + opt.d_horizon;
  ProductWindow window(s.take(total), 0);
  const std::size_t p = window.dim();

  std::vector<double> gammas(k, 0.0);
  gammas.reserve(k + opt.n_max);
  LogMatrix prod = LogMatrix::identity(p);
  HEstimate h;
  h.envelope = kInf;
  LogVector masses;
  for (std::size_t n = k + 1; n <= k + opt.n_max; ++n) {
    gammas.push_back(triplet_at(window, n - 1, std::nullopt, opt.d_horizon).gamma);
    right_multiply(prod, window.kernel(n - 1));
    masses = row_sums(prod);
    h.n_used = n - k;
    const double eps = opt.eps ? *opt.eps : quantile_of_positive(gammas, 0.25);
    if (eps > 0.0) {
      h.eps = eps;
      const auto delta = Delta(k, n, eps, gammas);
      h.envelope = delta ? *delta / 2.0 : kInf;
      if (h.envelope <= opt.tol) {
        h.converged = true;
        break;
      }
    }
  }
  if (std::none_of(gammas.begin() + static_cast<long>(k), gammas.end(),
                   [](double g) { return g > 0.0; })) {
    throw NoCoupling("estimate_h: no coupling observed up to n_max");
  }
  h.anchor = opt.anchor.value_or(static_cast<std::size_t>(
      std::max_element(masses.values.begin(), masses.values.end()) - masses.values.begin()));
  if (h.anchor >= p) throw DimensionError("estimate_h: anchor out of range");
  const double ref = masses.values[h.anchor];
  if (!(ref > 0.0)) throw AssumptionViolation("estimate_h: anchor mass vanishes", h.anchor);
  h.values.resize(p);
  for (std::size_t x = 0; x < p; ++x) h.values[x] = masses.values[x] / ref;
  h.values[h.anchor] = 1.0;
  return h;
}

ApproxReport check_uniform_approx(const EnvironmentStream& stream, const Measure& mu1,
                                  const Measure& mu2, double delta, std::size_t n_first,
                                  std::size_t n_last, std::size_t tail) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0,1)");
  if (n_first > n_last) throw InvalidInput("empty n range");
  EnvironmentStream s(stream);
  const std::size_t N = n_last + tail;
  ProductWindow window(s.take(N), 0);
  const std::size_t p = window.dim();
  if (mu1.size() != p || mu2.size() != p) throw DimensionError("measure sizes differ");

  // h_n ~ m_{n,N}, by one backward sweep.
  std::vector<LogVector> h(n_last + 1);
  LogVector v{std::vector<double>(p, 1.0), 0.0};
  for (std::size_t i = N; i-- > 0;) {
    apply_right(window.kernel(i), v);
    if (i <= n_last) h[i] = v;
  }
  auto pair_h = [&](const Measure& mu, std::size_t n) {
    double acc = 0.0;
    for (std::size_t x = 0; x < p; ++x) acc += mu[x] * h[n].values[x];
    return acc;
  };

  ApproxReport report;
  const double h1 = pair_h(mu1, 0);
  const double h2 = pair_h(mu2, 0);
  if (!(h2 > 0.0)) throw MassAnnihilated();
  report.ratio_h = h1 / h2;

  Measure rho(p);
  for (std::size_t x = 0; x < p; ++x) rho[x] = mu1[x] - report.ratio_h * mu2[x];
  Measure pi = mu2.normalized();
  Measure chain = mu1.normalized();
  double log_rho = 0.0;
  double log_mu1 = std::log(mu1.mass());

  auto project = [&](std::size_t n) {
    const double coef = pair_h(rho, n) / pair_h(pi, n);
    double top = 0.0;
    for (std::size_t x = 0; x < p; ++x) {
      rho[x] -= coef * pi[x];
      top = std::max(top, std::abs(rho[x]));
    }
    if (top > 0.0) {
      for (std::size_t x = 0; x < p; ++x) rho[x] /= top;
      log_rho += std::log(top);
    }
  };
  project(0);

  std::vector<double> ns, logs;
  for (std::size_t n = 1; n <= n_last; ++n) {
    const Kernel& m = window.kernel(n - 1);
    rho = act_left(rho, m);
    pi = projective_step(pi, m).measure;
    const auto step = projective_step(chain, m);
    chain = step.measure;
    log_mu1 += step.log_norm;
    project(n);
    if (n < n_first) continue;
    const double norm = rho.tv_norm();
    const double log_err = norm > 0.0 ? std::log(norm) + log_rho - log_mu1 : -kInf;
    report.points.push_back({n, log_err});
    ns.push_back(static_cast<double>(n));
    logs.push_back(log_err);
  }
  report.fitted_rate = fitted_geometric_rate(ns, logs);
  const double log_delta = std::log(delta);
  std::optional<std::size_t> cross;
  for (auto it = report.points.rbegin(); it != report.points.rend(); ++it) {
    if (it->log_error <= static_cast<double>(it->n) * log_delta) {
      cross = it->n;
    } else {
      break;
    }
  }
  report.crossover = cross;
  report.pass = cross.has_value();
  return report;
}

Trajectory run_trajectory(EnvironmentStream stream, const Measure& mu, std::size_t n,
                          bool keep_increments) {
  if (!mu.is_nonnegative()) throw InvalidInput("starting measure must be nonnegative");
  Trajectory t;
  const double m0 = mu.mass();
  if (!(m0 > 0.0)) throw MassAnnihilated();
  t.final_measure = mu.normalized();
  t.log_norm = std::log(m0);
  if (keep_increments) t.increments.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto step = projective_step(t.final_measure, stream.next());
    t.final_measure = std::move(step.measure);
    t.log_norm += step.log_norm;
    if (keep_increments) t.increments.push_back(step.log_norm);
  }
  return t;
}

LyapunovEstimate lyapunov_sequential(const EnvironmentStream& stream, const Measure& mu,
                                     std::size_t n) {
  if (n < 1) throw InvalidInput("lyapunov_sequential: n must be >= 1");
  const Trajectory t = run_trajectory(stream, mu.normalized(), n);
  LyapunovEstimate e;
  e.value = t.log_norm / static_cast<double>(n);
  e.method = LyapunovMethod::sequential;
  e.n = n;
  return e;
}

LyapunovEstimate lyapunov_sequential(const EnvironmentSpec& spec, const Measure& mu,
                                     std::size_t n, std::size_t replicas, unsigned threads) {
  if (replicas < 1) throw InvalidInput("replicas must be >= 1");
  std::vector<double> values(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), r, "lyapunov")));
    values[r] = lyapunov_sequential(stream, mu, n).value;
  });
  const MeanSe ms = mean_se(values);
  return {ms.mean, ms.se, LyapunovMethod::sequential, n, replicas};
}

LyapunovEstimate lyapunov_kingman(const EnvironmentSpec& spec, std::size_t N_max,
                                  std::size_t replicas, unsigned threads) {
  if (replicas < 1 || N_max < 1) throw InvalidInput("kingman: need N_max, replicas >= 1");
  std::vector<std::vector<double>> logs(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), r, "kingman")));
    ProductWindow window(stream.take(N_max), 0);
    const auto masses = window.masses_from(0);
    logs[r].resize(N_max);
    for (std::size_t N = 1; N <= N_max; ++N) logs[r][N - 1] = masses[N].log_sup();
  });
  LyapunovEstimate best;
  best.method = LyapunovMethod::kingman;
  best.replicas = replicas;
  best.value = kInf;
  for (std::size_t N = 1; N <= N_max; ++N) {
    std::vector<double> v(replicas);
    for (std::size_t r = 0; r < replicas; ++r) v[r] = logs[r][N - 1] / static_cast<double>(N);
    const MeanSe ms = mean_se(v);
    if (ms.mean < best.value) {
      best.value = ms.mean;
      best.std_error = ms.se;
      best.n = N;
    }
  }
  return best;
}

std::vector<ProjectiveSample> sample_stationary(const EnvironmentSpec& spec, double tol,
                                                std::size_t n_max, std::size_t replicas,
                                                unsigned threads,
                                                std::optional<Measure> start) {
  if (!spec.is_iid()) {
    throw InvalidInput(
        "stationary sampling by time reversal needs an i.i.d. environment; "
        "use forward sampling for other stationary specs");
  }
  if (!(tol > 0.0)) throw InvalidInput("sample_stationary: tol must be positive");
  const std::size_t p = spec.dim();
  if (p > kMaxDenseSize) throw InvalidInput("sample_stationary: state space too large");
  const Measure mu = start_or_uniform(start, p);
  std::vector<ProjectiveSample> out(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), r, "stationary")));
    LogMatrix prod = LogMatrix::identity(p);
    ProjectiveSample& sample = out[r];
    sample.measure = mu;
    for (std::size_t n = 1; n <= n_max; ++n) {
      left_multiply(stream.next(), prod);
      Measure next = left_apply_normalized(mu, prod);
      sample.tv_increment = tv_distance(next, sample.measure);
      sample.increments.push_back(sample.tv_increment);
      sample.measure = std::move(next);
      sample.depth = n;
      if (sample.tv_increment < tol && row_spread(prod) < tol) {
        sample.converged = true;
        break;
      }
    }
  });
  return out;
}

std::vector<Measure> sample_forward(const EnvironmentSpec& spec, std::size_t n,
                                    std::size_t replicas, unsigned threads,
                                    std::optional<Measure> start) {
  const Measure mu = start_or_uniform(start, spec.dim());
  std::vector<Measure> out(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), r, "forward")));
    out[r] = run_trajectory(stream, mu, n).final_measure;
  });
  return out;
}

LyapunovEstimate lyapunov_integral(const EnvironmentSpec& spec,
                                   const std::vector<Measure>& lambda_samples,
                                   std::size_t draws_per_sample) {
  if (!spec.is_iid()) throw InvalidInput("integral formula needs an i.i.d. environment");
  if (lambda_samples.empty() || draws_per_sample < 1) {
    throw InvalidInput("lyapunov_integral: need samples and draws");
  }
  std::vector<double> terms(lambda_samples.size());
  for (std::size_t i = 0; i < lambda_samples.size(); ++i) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), i, "integral")));
    double acc = 0.0;
    for (std::size_t j = 0; j < draws_per_sample; ++j) {
      acc += std::log(act_left(lambda_samples[i], stream.next()).tv_norm());
    }
    terms[i] = acc / static_cast<double>(draws_per_sample);
  }
  const MeanSe ms = mean_se(terms);
  return {ms.mean, ms.se, LyapunovMethod::integral, draws_per_sample, lambda_samples.size()};
}

InvarianceReport energy_test(const std::vector<Measure>& a, const std::vector<Measure>& b,
                             std::size_t permutations, std::uint64_t seed) {
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  if (na < 2 || nb < 2) throw InvalidInput("energy_test: need two samples per group");
  std::vector<const Measure*> pooled;
  pooled.reserve(n);
  for (const auto& m : a) pooled.push_back(&m);
  for (const auto& m : b) pooled.push_back(&m);
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = tv_distance(*pooled[i], *pooled[j]);
    }
  }
  auto statistic = [&](const std::vector<std::size_t>& label) {
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool ai = label[i] < na;
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool aj = label[j] < na;
        const double d = dist[i * n + j];
        if (ai && aj) {
          saa += d;
        } else if (!ai && !aj) {
          sbb += d;
        } else {
          sab += d;
        }
      }
    }
    const double fa = static_cast<double>(na), fb = static_cast<double>(nb);
    return 2.0 * sab / (fa * fb) - 2.0 * saa / (fa * fa) - 2.0 * sbb / (fb * fb);
  };
  std::vector<std::size_t> label(n);
  std::iota(label.begin(), label.end(), 0);
  InvarianceReport r;
  r.n_before = na;
  r.n_after = nb;
  r.statistic = statistic(label);
  Engine g(seed);
  std::size_t at_least = 0;
  for (std::size_t k = 0; k < permutations; ++k) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(label[i], label[static_cast<std::size_t>(g() % (i + 1))]);
    }
    if (statistic(label) >= r.statistic - 1e-15) ++at_least;
  }
  r.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
  return r;
}

InvarianceReport invariance_check(const EnvironmentSpec& spec,
                                  const std::vector<Measure>& lambda_samples,
                                  std::size_t permutations, std::size_t max_points) {
  if (!spec.is_iid()) throw InvalidInput("invariance check needs an i.i.d. environment");
  const std::size_t used = std::min(lambda_samples.size(), max_points);
  const std::size_t half = used / 2;
  std::vector<Measure> before(lambda_samples.begin(),
                              lambda_samples.begin() + static_cast<long>(half));
  std::vector<Measure> after;
  after.reserve(used - half);
  for (std::size_t i = half; i < used; ++i) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), i, "invariance")));
    after.push_back(projective_step(lambda_samples[i], stream.next()).measure);
  }
  return energy_test(before, after, permutations, derive_seed(spec.seed(), 0, "permutation"));
}

}  // namespace kprod
