#include "kprod/criticality.hpp"

#include <algorithm>
#include <cmath>

#include "kprod/parallel.hpp"
#include "kprod/rng.hpp"

namespace kprod {

namespace {

constexpr double kNhExponent = 0.25;
constexpr double kFlatSpread = 1e-9;

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = m * sxx - sx * sx;
  return denom == 0.0 ? 0.0 : (m * sxy - sx * sy) / denom;
}

}  // namespace

EnvironmentSpec center_environment(const EnvironmentSpec& spec, double lambda_hat) {
  if (!std::isfinite(lambda_hat)) throw InvalidInput("center_environment: lambda must be finite");
  if (lambda_hat == 0.0) return spec;
  return spec.scaled(std::exp(-lambda_hat));
}

std::string to_string(OscVerdict v) {
  switch (v) {
    case OscVerdict::oscillating: return "oscillating";
    case OscVerdict::one_sided: return "one-sided";
    case OscVerdict::bounded: return "bounded";
  }
  return "unknown";
}

std::string to_string(NhVerdict v) {
  switch (v) {
    case NhVerdict::consistent: return "NH-consistent";
    case NhVerdict::rejected: return "NH-rejected";
    case NhVerdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

OscillationReport classify_series(const std::vector<double>& s, double threshold,
                                  std::size_t reference_n) {
  OscillationReport r;
  if (s.empty()) return r;
  r.max_s = r.min_s = s.front();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t n = i + 1;
    r.max_s = std::max(r.max_s, s[i]);
    r.min_s = std::min(r.min_s, s[i]);
    if (!r.first_up && s[i] >= threshold) r.first_up = n;
    if (!r.first_down && s[i] <= -threshold) r.first_down = n;
    if (reference_n > 0 && n >= reference_n) {
      r.max_dev_after_reference =
          std::max(r.max_dev_after_reference, std::abs(s[i] - s[reference_n - 1]));
    }
  }
  r.final_s = s.back();
  if (r.first_up && r.first_down) {
    r.verdict = OscVerdict::oscillating;
  } else if (r.first_up || r.first_down) {
    r.verdict = OscVerdict::one_sided;
  } else {
    r.verdict = OscVerdict::bounded;
  }
  return r;
}

OscillationReport oscillation_stats(EnvironmentStream stream, const Measure& mu, std::size_t n,
                                    double threshold, std::size_t reference_n) {
  if (!mu.is_nonnegative()) throw InvalidInput("oscillation_stats: mu must be nonnegative");
  const double m0 = mu.mass();
  if (!(m0 > 0.0)) throw MassAnnihilated();
  Measure cur = mu.normalized();
  double s = std::log(m0);
  std::vector<double> series;
  series.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto step = projective_step(cur, stream.next());
    cur = std::move(step.measure);
    s += step.log_norm;
    series.push_back(s);
  }
  return classify_series(series, threshold, reference_n);
}

NhReport nh_diagnostic(const EnvironmentSpec& spec, std::size_t replicas, std::size_t n,
                       double match_tol, unsigned threads, std::size_t min_pairs) {
  NhReport report;
  if (!spec.is_iid()) throw InvalidInput("nh_diagnostic needs an i.i.d. environment");
  if (replicas < 2 || n < 16) return report;
  for (std::size_t c = n / 16; c <= n; c *= 2) report.checkpoints.push_back(c);
  const std::size_t nc = report.checkpoints.size();
  const std::size_t p = spec.dim();

  std::vector<std::vector<Measure>> mus(replicas, std::vector<Measure>(nc));
  std::vector<std::vector<double>> ss(replicas, std::vector<double>(nc));
  parallel_for(replicas, threads, [&](std::size_t r) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), r, "nh")));
    Measure cur = Measure::uniform(p);
    double s = 0.0;
    std::size_t next_cp = 0;
    for (std::size_t i = 1; i <= n && next_cp < nc; ++i) {
      auto step = projective_step(cur, stream.next());
      cur = std::move(step.measure);
      s += step.log_norm;
      if (i == report.checkpoints[next_cp]) {
        mus[r][next_cp] = cur;
        ss[r][next_cp] = s;
        ++next_cp;
      }
    }
  });

  std::vector<double> logn, logspread;
  bool flat = true;
  for (std::size_t c = 0; c < nc; ++c) {
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < replicas; ++i) {
      for (std::size_t j = i + 1; j < replicas; ++j) {
        if (tv_distance(mus[i][c], mus[j][c]) < match_tol) {
          total += std::abs(ss[i][c] - ss[j][c]);
          ++pairs;
        }
      }
    }
    report.close_pairs.push_back(pairs);
    const double spread = pairs > 0 ? total / static_cast<double>(pairs) : 0.0;
    report.spreads.push_back(spread);
    if (pairs < min_pairs) return report;
    if (spread > kFlatSpread) {
      flat = false;
      logn.push_back(std::log(static_cast<double>(report.checkpoints[c])));
      logspread.push_back(std::log(spread));
    }
  }
  if (flat || logn.size() < 2) {
    report.spread_exponent = 0.0;
    report.verdict = NhVerdict::consistent;
    return report;
  }
  report.spread_exponent = slope(logn, logspread);
  report.verdict =
      report.spread_exponent > kNhExponent ? NhVerdict::rejected : NhVerdict::consistent;
  return report;
}

ZeroOneReport zero_one_check(const EnvironmentSpec& spec, const std::vector<Measure>& measures,
                             std::size_t n, std::size_t replicas, double threshold,
                             unsigned threads) {
  if (measures.empty()) throw InvalidInput("zero_one_check: need at least one measure");
  ZeroOneReport report;
  report.verdicts.assign(replicas, std::vector<OscVerdict>(measures.size()));
  report.norm_verdicts.assign(replicas, OscVerdict::bounded);
  const std::size_t p = spec.dim();
  parallel_for(replicas, threads, [&](std::size_t r) {
    EnvironmentStream stream(spec.with_seed(derive_seed(spec.seed(), r, "zero-one")));
    for (std::size_t j = 0; j < measures.size(); ++j) {
      report.verdicts[r][j] = oscillation_stats(stream, measures[j], n, threshold).verdict;
    }
    EnvironmentStream shifted = stream.spawn_shifted(1);
    LogMatrix prod = LogMatrix::identity(p);
    std::vector<double> series;
    series.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      right_multiply(prod, shifted.next());
      double top = 0.0;
      for (std::size_t x = 0; x < p; ++x) {
        double row = 0.0;
        for (std::size_t y = 0; y < p; ++y) row += prod.values[x * p + y];
        top = std::max(top, row);
      }
      series.push_back(std::log(top) + prod.log_scale);
    }
    report.norm_verdicts[r] = classify_series(series, threshold).verdict;
  });
  for (std::size_t r = 0; r < replicas; ++r) {
    const auto& v = report.verdicts[r];
    const bool same = std::all_of(v.begin(), v.end(), [&](OscVerdict x) { return x == v[0]; });
    if (same && v[0] == report.norm_verdicts[r]) ++report.agreeing_seeds;
  }
  report.pass = report.agreeing_seeds == replicas;
  return report;
}

}  // namespace kprod
