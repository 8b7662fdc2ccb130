// kprod: batch front end for the random kernel product library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "kprod/asymptotics.hpp"
#include "kprod/contraction.hpp"
#include "kprod/criticality.hpp"
#include "kprod/doeblin.hpp"
#include "kprod/environment.hpp"
#include "kprod/errors.hpp"
#include "kprod/hilbert.hpp"
#include "kprod/io.hpp"
#include "kprod/leslie.hpp"
#include "kprod/parallel.hpp"
#include "kprod/rng.hpp"

namespace fs = std::filesystem;
using namespace kprod;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssumption = 1;
constexpr int kExitInvalid = 2;

struct ParamDef {
  std::string name;
  json fallback;
  std::string help;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<ParamDef> params;
  bool needs_env = true;
  std::string columns;  // appended to --help
};

// Options shared by every subcommand; flags win over the config file.
struct Common {
  std::string config;
  std::string env;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<unsigned> threads;
  std::string out;
  std::string format;
  std::map<std::string, std::string> flags;
};

struct Context {
  std::optional<EnvironmentSpec> spec;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  unsigned threads = 1;
  fs::path out = ".";
  OutputFormat format = OutputFormat::csv;
  json params = json::object();

  double num(const std::string& k) const { return params.at(k).get<double>(); }
  std::size_t count(const std::string& k) const {
    const double v = num(k);
    if (!(v >= 0.0) || v != std::floor(v)) throw InvalidInput(k + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
  }
  const EnvironmentSpec& env() const {
    if (!spec) throw InvalidInput("an environment is required (--env or \"env\" in --config)");
    return *spec;
  }
  std::string file(const std::string& stem) const {
    return (out / (stem + (format == OutputFormat::csv ? ".csv" : ".jsonl"))).string();
  }
  std::string json_file(const std::string& stem) const { return (out / (stem + ".json")).string(); }
};

struct Outcome {
  int code = kExitOk;
  json summary = json::object();
};

void print_summary(const std::string& command, const json& summary) {
  std::cout << command << '\n';
  for (const auto& [key, value] : summary.items()) {
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    if (text.size() > 100) text = text.substr(0, 97) + "...";
    std::cout << "  " << key << std::string(key.size() < 28 ? 28 - key.size() : 1, ' ') << text
              << '\n';
  }
}

json measure_json(const Measure& mu) { return json(mu.weights()); }

json num_or_string(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

json triplet_json(const AdmissibleTriplet& t) {
  return {{"nu", measure_json(t.nu)},
          {"c", num_or_string(t.c)},
          {"d", num_or_string(t.d)},
          {"gamma", num_or_string(t.gamma)},
          {"horizon_certified", t.horizon == kUnboundedHorizon ? json("unbounded") : json(t.horizon)},
          {"provenance", to_string(t.provenance)}};
}

Outcome run_lyapunov(const Context& ctx) {
  const EnvironmentSpec& spec = ctx.env();
  const std::size_t n = ctx.count("n");
  const std::size_t p = spec.dim();
  const Measure mu = Measure::uniform(p);
  Outcome o;

  // Trajectory log of replica 0, the same stream the replicated estimate uses.
  {
    RecordWriter log(ctx.file("trajectory"), ctx.format,
                     {"n", "log_norm_increment", "running_lambda", "tv_to_previous"});
    const std::size_t stride = std::max<std::size_t>(ctx.count("log_stride"), 1);
    EnvironmentStream stream(spec.with_seed(derive_seed(ctx.seed, 0, "lyapunov")));
    Measure cur = mu;
    double total = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      auto step = projective_step(cur, stream.next());
      const double tv = tv_distance(cur, step.measure);
      total += step.log_norm;
      cur = std::move(step.measure);
      if (i % stride == 0 || i == n) {
        log.row({static_cast<std::uint64_t>(i), step.log_norm, total / static_cast<double>(i), tv});
      }
    }
  }

  const EnvironmentSpec seeded = spec.with_seed(ctx.seed);
  const auto seq = lyapunov_sequential(seeded, mu, n, ctx.replicas, ctx.threads);
  const auto king = lyapunov_kingman(seeded, ctx.count("n_max"), ctx.replicas, ctx.threads);
  o.summary["sequential"] = {{"value", seq.value}, {"se", seq.std_error}, {"n", seq.n},
                             {"replicas", seq.replicas}};
  o.summary["kingman"] = {{"value", king.value}, {"se", king.std_error}, {"n_at_min", king.n},
                          {"n_max", ctx.count("n_max")}, {"replicas", king.replicas}};
  const double bias = ctx.num("bias_allowance") / static_cast<double>(n);
  if (spec.is_iid()) {
    const auto samples = sample_stationary(seeded, ctx.num("tol"), ctx.count("depth"),
                                           ctx.count("samples"), ctx.threads);
    std::vector<Measure> lam;
    lam.reserve(samples.size());
    for (const auto& s : samples) lam.push_back(s.measure);
    const auto integ = lyapunov_integral(seeded, lam, ctx.count("draws"));
    const double se = std::hypot(seq.std_error, integ.std_error);
    const double gap = std::abs(seq.value - integ.value);
    const bool ok = gap <= 3.0 * se + bias;
    o.summary["integral"] = {{"value", integ.value}, {"se", integ.std_error},
                             {"samples", lam.size()}};
    o.summary["consistency"] = {{"gap", gap}, {"tolerance", 3.0 * se + bias},
                                {"verdict", ok ? "consistent" : "inconsistent"}};
  } else {
    o.summary["integral"] = "skipped: needs an i.i.d. environment";
    o.summary["consistency"] = {{"verdict", "sequential-vs-kingman only"},
                                {"gap", std::abs(seq.value - king.value)}};
  }
  write_json_file(ctx.json_file("lyapunov"), o.summary);
  return o;
}

Outcome run_stationary(const Context& ctx) {
  const EnvironmentSpec seeded = ctx.env().with_seed(ctx.seed);
  const std::size_t p = seeded.dim();
  const auto samples = sample_stationary(seeded, ctx.num("tol"), ctx.count("depth"),
                                         ctx.replicas, ctx.threads);
  std::vector<std::string> cols = {"replica", "depth", "converged", "tv_increment"};
  if (ctx.format == OutputFormat::csv) {
    for (std::size_t x = 0; x < p; ++x) cols.push_back("w_" + std::to_string(x));
  } else {
    cols.push_back("measure");
  }
  RecordWriter w(ctx.file("lambda_samples"), ctx.format, cols);
  std::size_t converged = 0;
  double depth = 0.0;
  std::vector<Measure> lam;
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto& s = samples[r];
    std::vector<Cell> row = {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(s.depth),
                             s.converged, s.tv_increment};
    if (ctx.format == OutputFormat::csv) {
      for (std::size_t x = 0; x < p; ++x) row.emplace_back(s.measure[x]);
    } else {
      row.emplace_back(measure_json(s.measure));
    }
    w.row(row);
    converged += s.converged;
    depth += static_cast<double>(s.depth);
    lam.push_back(s.measure);
  }
  Outcome o;
  o.summary["samples"] = samples.size();
  o.summary["converged"] = converged;
  o.summary["mean_depth"] = samples.empty() ? 0.0 : depth / static_cast<double>(samples.size());
  if (lam.size() >= 4) {
    const auto inv = invariance_check(seeded, lam, ctx.count("permutations"));
    o.summary["invariance"] = {{"statistic", inv.statistic}, {"p_value", inv.p_value},
                               {"n_before", inv.n_before}, {"n_after", inv.n_after}};
  }
  write_json_file(ctx.json_file("stationary"), o.summary);
  return o;
}

Outcome run_doeblin(const Context& ctx) {
  const EnvironmentSpec& spec = ctx.env();
  Outcome o;
  const AssumptionReport a = check_basic_assumptions(spec);
  o.summary["assumption2"] = a.assumption2;
  o.summary["assumption3"] = a.assumption3;
  if (!a.assumption2) {
    o.summary["message"] = a.message;
    write_json_file(ctx.json_file("doeblin"), o.summary);
    std::cerr << a.message << '\n';
    o.code = kExitAssumption;
    return o;
  }
  const std::size_t n = std::max<std::size_t>(ctx.count("n"), 1);
  const std::size_t horizon = std::max<std::size_t>(ctx.count("horizon"), 1);
  EnvironmentStream stream(spec.with_seed(ctx.seed));
  std::vector<Kernel> kernels;
  try {
    kernels = stream.take(n + horizon);
  } catch (const EndOfScript&) {
    EnvironmentStream again(spec.with_seed(ctx.seed));
    while (true) {
      try {
        kernels.push_back(again.next());
      } catch (const EndOfScript&) {
        break;
      }
    }
  }
  const ProductWindow window(kernels, 0);
  const std::size_t last = std::min(n, window.end());
  RecordWriter w(ctx.file("gamma_series"), ctx.format,
                 {"n", "c", "d", "gamma", "horizon_certified", "provenance"});
  std::vector<double> gammas;
  for (std::size_t i = 0; i < last; ++i) {
    const auto t = triplet_at(window, i, std::nullopt, horizon);
    if (i == 0) write_json_file(ctx.json_file("triplet"), triplet_json(t));
    w.row({static_cast<std::uint64_t>(i), t.c, t.d, t.gamma, static_cast<std::uint64_t>(t.horizon),
           to_string(t.provenance)});
    gammas.push_back(t.gamma);
  }
  o.summary["steps"] = gammas.size();
  o.summary["gamma_0"] = gammas.front();
  o.summary["gamma_min"] = *std::min_element(gammas.begin(), gammas.end());
  o.summary["gamma_bar"] = gamma_bar(gammas);
  write_json_file(ctx.json_file("doeblin"), o.summary);
  return o;
}

Outcome run_contract_check(const Context& ctx) {
  const std::size_t instances = ctx.count("instances");
  const std::size_t length = ctx.count("length");
  if (length < 2) throw InvalidInput("length must be >= 2");
  std::vector<std::vector<SuiteRecord>> results(instances);
  const std::optional<EnvironmentSpec>& spec = ctx.spec;
  std::size_t p = ctx.count("p");
  if (spec) p = spec->dim();
  if (p < 1) throw InvalidInput("p must be >= 1");
  const double zero_prob = ctx.num("zero_prob");
  parallel_for(instances, ctx.threads, [&](std::size_t i) {
    std::vector<Kernel> kernels;
    if (spec) {
      EnvironmentStream s(spec->with_seed(derive_seed(ctx.seed, i, "contract-window")));
      kernels = s.take(length);
    } else {
      Engine g(derive_seed(ctx.seed, i, "contract-window"));
      kernels = random_window(p, length, g, zero_prob);
    }
    results[i] = inequality_suite(ProductWindow(std::move(kernels), 0), i, ctx.seed);
  });
  const bool csv = ctx.format == OutputFormat::csv;
  RecordWriter w(ctx.file("checks"), ctx.format,
                 csv ? std::vector<std::string>{"check", "instance", "k", "n", "N", "lhs", "rhs",
                                                "slack", "pass"}
                     : std::vector<std::string>{"check", "params", "lhs", "rhs", "slack", "pass"});
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& recs : results) {
    for (const auto& r : recs) {
      const auto& rep = r.report;
      if (csv) {
        w.row({rep.check, static_cast<std::uint64_t>(r.instance), static_cast<std::uint64_t>(r.k),
               static_cast<std::uint64_t>(r.n), static_cast<std::uint64_t>(r.N), rep.lhs, rep.rhs,
               rep.slack, rep.pass});
      } else {
        json params = {{"instance", r.instance}, {"k", r.k}, {"n", r.n}, {"N", r.N}};
        w.row({rep.check, params, rep.lhs, rep.rhs, rep.slack, rep.pass});
      }
      auto& t = tally[rep.check];
      ++t.first;
      t.second += rep.pass;
      if (std::isfinite(rep.slack)) worst = std::min(worst, rep.slack);
    }
  }
  Outcome o;
  bool all = true;
  for (const auto& [check, t] : tally) {
    o.summary[check] = std::to_string(t.second) + "/" + std::to_string(t.first) + " pass";
    all = all && t.first == t.second;
  }
  o.summary["worst_slack"] = worst;
  o.summary["all_pass"] = all;
  write_json_file(ctx.json_file("contract_check"), o.summary);
  if (!all) o.code = kExitAssumption;
  return o;
}

Outcome run_leslie_audit(const Context& ctx) {
  const EnvironmentSpec seeded = ctx.env().with_seed(ctx.seed);
  Outcome o;
  const LeslieAudit audit =
      audit_conditions(seeded, ctx.count("samples"), ctx.count("horizon"), ctx.threads);
  json conds = json::array();
  for (const auto& c : audit.conditions) {
    conds.push_back({{"name", c.name}, {"pass", c.pass}, {"exact", c.exact}, {"note", c.note}});
  }
  o.summary["conditions"] = conds;
  o.summary["prob_gamma_positive"] = audit.prob_gamma_positive;
  o.summary["min_d_horizon"] = audit.min_d_horizon;
  o.summary["gamma_zero_suspect"] = audit.gamma_zero_suspect;
  o.summary["assumption2"] = audit.assumption2;
  o.summary["assumption3"] = audit.assumption3;
  o.summary["assumption4"] = audit.assumption4;
  o.summary["assumption4_plus"] = audit.assumption4_plus;
  if (!audit.assumption2) {
    o.code = kExitAssumption;
    write_json_file(ctx.json_file("leslie_audit"), o.summary);
    return o;
  }
  const LeslieTriplet t = leslie_triplet(EnvironmentStream(seeded), ctx.count("triplet_horizon"));
  json tj = triplet_json(t.triplet);
  tj["d_prime"] = num_or_string(t.d_prime);
  tj["d_double_prime"] = num_or_string(t.d_double_prime);
  tj["certified_c"] = t.certified_c;
  tj["certified_d"] = t.certified_d;
  tj["certificate_ok"] = t.certificate_ok;
  write_json_file(ctx.json_file("leslie_triplet"), tj);
  o.summary["closed_form_gamma"] = num_or_string(t.triplet.gamma);
  o.summary["certificate_ok"] = t.certificate_ok;
  write_json_file(ctx.json_file("leslie_audit"), o.summary);
  if (!t.certificate_ok) o.code = kExitAssumption;
  return o;
}

Outcome run_counterexample(const Context& ctx) {
  const std::size_t K = ctx.count("K");
  const Counterexample ce = build_counterexample(ctx.num("a"), ctx.num("delta"), squared_blocks(K));
  const CounterexampleReport rep =
      verify_counterexample(ce, ctx.count("n_verify"), ctx.count("d_horizon"));
  {
    RecordWriter w(ctx.file("counterexample"), ctx.format,
                   {"n", "lhs_log_ratio", "rhs_log_bound"});
    for (const auto& r : rep.rows) {
      w.row({static_cast<std::uint64_t>(r.n), r.lhs_log_ratio, r.rhs_log_bound});
    }
  }
  {
    RecordWriter w(ctx.file("d_series"), ctx.format, {"n_max", "d_horizon"});
    for (std::size_t i = 0; i < rep.d_series.size(); ++i) {
      w.row({static_cast<std::uint64_t>(i + 1), rep.d_series[i]});
    }
  }
  Outcome o;
  o.summary["K"] = ce.K;
  o.summary["alpha"] = ce.alpha;
  o.summary["c"] = ce.c;
  o.summary["growth"] = ce.growth;
  o.summary["longest_run"] = ce.longest_run;
  o.summary["criterion_met"] = rep.criterion_met;
  o.summary["divergence_verified"] = rep.divergence_verified;
  o.summary["d_at_horizon"] = rep.d_at_horizon;
  o.summary["d_horizon_used"] = rep.d_horizon_used;
  write_json_file(ctx.json_file("counterexample"), o.summary);
  if (!rep.criterion_met || !rep.divergence_verified) o.code = kExitAssumption;
  return o;
}

Outcome run_critical(const Context& ctx) {
  const EnvironmentSpec spec = ctx.env().with_seed(ctx.seed);
  const std::size_t p = spec.dim();
  const Measure mu = Measure::uniform(p);
  Outcome o;
  double lambda = ctx.num("lambda");
  double se = 0.0;
  if (std::isnan(lambda)) {
    const auto est = lyapunov_sequential(spec, mu, ctx.count("lambda_n"), ctx.replicas, ctx.threads);
    lambda = est.value;
    se = est.std_error;
  }
  const EnvironmentSpec centered = center_environment(spec, lambda);
  const std::size_t n = ctx.count("n");
  const double threshold = ctx.num("threshold");
  const std::size_t reference = ctx.count("reference_n");
  std::vector<OscillationReport> reps(ctx.replicas);
  parallel_for(ctx.replicas, ctx.threads, [&](std::size_t r) {
    EnvironmentStream s(centered.with_seed(derive_seed(ctx.seed, r, "critical")));
    reps[r] = oscillation_stats(s, mu, n, threshold, reference);
  });
  RecordWriter w(ctx.file("oscillation"), ctx.format,
                 {"replica", "max_s", "min_s", "final_s", "first_up", "first_down",
                  "max_dev_after_reference", "verdict"});
  double mx = -std::numeric_limits<double>::infinity(), mn = -mx;
  std::size_t up = 0, down = 0, both = 0;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& x = reps[r];
    auto idx = [](const std::optional<std::size_t>& v) -> Cell {
      return v ? Cell(static_cast<std::uint64_t>(*v)) : Cell(std::int64_t{-1});
    };
    w.row({static_cast<std::uint64_t>(r), x.max_s, x.min_s, x.final_s, idx(x.first_up),
           idx(x.first_down), x.max_dev_after_reference, to_string(x.verdict)});
    mx = std::max(mx, x.max_s);
    mn = std::min(mn, x.min_s);
    up += x.first_up.has_value();
    down += x.first_down.has_value();
    both += x.verdict == OscVerdict::oscillating;
  }
  const double R = static_cast<double>(std::max<std::size_t>(reps.size(), 1));
  o.summary["lambda_hat"] = lambda;
  o.summary["se"] = se;
  o.summary["osc"] = {{"max", mx},
                      {"min", mn},
                      {"crossed_up", static_cast<double>(up) / R},
                      {"crossed_down", static_cast<double>(down) / R},
                      {"oscillating", static_cast<double>(both) / R}};
  if (centered.is_iid()) {
    const NhReport nh = nh_diagnostic(centered, ctx.replicas, ctx.count("nh_n"),
                                      ctx.num("match_tol"), ctx.threads, ctx.count("min_pairs"));
    o.summary["nh"] = {{"verdict", to_string(nh.verdict)},
                       {"spread_exponent", nh.spread_exponent}};
  } else {
    o.summary["nh"] = {{"verdict", to_string(NhVerdict::inconclusive)}, {"spread_exponent", 0.0}};
  }
  write_json_file(ctx.json_file("verdict"), o.summary);
  return o;
}

Outcome run_hilbert_compare(const Context& ctx) {
  ComparisonOptions opt;
  opt.instances = ctx.count("instances");
  opt.p = ctx.count("p");
  opt.window = ctx.count("window");
  opt.k = ctx.count("k");
  opt.pairs = ctx.count("pairs");
  opt.seed = ctx.seed;
  opt.threads = ctx.threads;
  const auto rows = hilbert_comparison(opt);
  std::size_t tv_ok = 0, hil_ok = 0, hen_ok = 0;
  {
    RecordWriter w(ctx.file("comparison"), ctx.format,
                   {"instance_id", "gamma", "one_minus_gamma", "tau_birkhoff",
                    "observed_tv_factor", "observed_hilbert_factor"});
    RecordWriter h(ctx.file("hennion"), ctx.format,
                   {"instance_id", "hennion_bound", "d_horizon_min", "pass"});
    for (const auto& r : rows) {
      w.row({static_cast<std::uint64_t>(r.instance_id), r.gamma, r.one_minus_gamma, r.tau_birkhoff,
             r.observed_tv_factor, r.observed_hilbert_factor});
      h.row({static_cast<std::uint64_t>(r.instance_id), r.hennion_bound, r.d_horizon_min,
             r.hennion_ok});
      tv_ok += r.tv_ok;
      hil_ok += r.hilbert_ok;
      hen_ok += r.hennion_ok;
    }
  }
  const std::size_t lp = ctx.count("leslie_p");
  const std::size_t ln = ctx.count("leslie_n");
  std::size_t pattern_ok = 0, pattern_total = 0, nonpositive = 0;
  {
    RecordWriter w(ctx.file("leslie_pattern"), ctx.format,
                   {"p", "n", "zero_entries", "matches_prediction", "uniformly_positive"});
    Engine g(derive_seed(ctx.seed, 0, "leslie-pattern"));
    for (std::size_t p = 2; p <= lp; ++p) {
      for (std::size_t n = 1; n <= ln; ++n) {
        std::vector<Kernel> ks;
        for (std::size_t i = 0; i < n; ++i) {
          std::vector<double> f(p), s(p);
          for (std::size_t x = 0; x < p; ++x) {
            f[x] = 0.1 + uniform01(g);
            s[x] = 0.1 + uniform01(g);
          }
          ks.push_back(Kernel::leslie(std::move(f), std::move(s)));
        }
        const auto r = leslie_pattern(ks);
        w.row({static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(n),
               static_cast<std::uint64_t>(r.zero_entries), r.matches_prediction,
               r.uniformly_positive});
        ++pattern_total;
        pattern_ok += r.matches_prediction;
        if (n < p) nonpositive += !r.uniformly_positive;
      }
    }
  }
  Outcome o;
  const std::size_t N = rows.size();
  o.summary["instances"] = N;
  o.summary["tv_within_one_minus_gamma"] = tv_ok;
  o.summary["hilbert_within_tau"] = hil_ok;
  o.summary["hennion_below_d_horizon"] = hen_ok;
  o.summary["birkhoff_label"] = "external-standard";
  o.summary["leslie_pattern_matches"] = std::to_string(pattern_ok) + "/" + std::to_string(pattern_total);
  o.summary["leslie_nonpositive_n_below_p"] = nonpositive;

  auto q = [](double x, double y) { return 1.0 + x * y; };
  auto one = [](double) { return 1.0; };
  json grids = json::array();
  for (std::size_t grid : {std::size_t{32}, std::size_t{64}}) {
    const auto ex = discretize_kernel_example(grid, one, q);
    grids.push_back({{"grid", grid}, {"K", ex.K}, {"c", ex.triplet.c}, {"d", ex.triplet.d},
                     {"certified_c", ex.certified_c}, {"certified_d", ex.certified_d},
                     {"certificate_ok", ex.certificate_ok}});
  }
  o.summary["discretized_example"] = grids;
  write_json_file(ctx.json_file("hilbert_compare"), o.summary);
  std::size_t expected_nonpositive = 0;
  for (std::size_t p = 2; p <= lp; ++p) expected_nonpositive += std::min(ln, p - 1);
  const bool ok = tv_ok == N && hil_ok == N && hen_ok == N && pattern_ok == pattern_total &&
                  nonpositive == expected_nonpositive;
  if (!ok) o.code = kExitAssumption;
  return o;
}

using Runner = Outcome (*)(const Context&);

struct Entry {
  Command cmd;
  Runner run;
};

std::vector<Entry> commands() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {
      {{"lyapunov",
        "Sequential, Kingman and integral estimates of the Lyapunov exponent",
        {{"n", 10000, "trajectory length"},
         {"n_max", 1000, "largest N in the Kingman estimate"},
         {"samples", 2000, "Lambda samples for the integral estimate"},
         {"depth", 2000, "maximal backward depth per Lambda sample"},
         {"tol", 1e-12, "TV increment stopping the backward product"},
         {"draws", 1, "kernel draws per Lambda sample"},
         {"bias_allowance", 5.0, "added tolerance c/n for the sequential start bias"},
         {"log_stride", 1, "write every k-th trajectory row"}},
        true,
        "trajectory: n, log_norm_increment, running_lambda, tv_to_previous"},
       run_lyapunov},
      {{"stationary",
        "Samples of the stationary projective law by backward products (i.i.d. only)",
        {{"depth", 2000, "maximal backward depth"},
         {"tol", 1e-12, "TV increment stopping the backward product"},
         {"permutations", 199, "permutations in the invariance test"}},
        true,
        "lambda_samples: replica, depth, converged, tv_increment, w_0..w_{p-1} "
        "(jsonl: measure array)"},
       run_stationary},
      {{"doeblin",
        "Admissible triplet at time 0 and the coupling coefficient series",
        {{"n", 20, "number of steps in the series"},
         {"horizon", 64, "look-ahead used to certify d"}},
        true,
        "gamma_series: n, c, d, gamma, horizon_certified, provenance"},
       run_doeblin},
      {{"contract-check",
        "Batch minoration, contraction, growth-ratio and sandwich inequalities",
        {{"instances", 200, "number of random windows"},
         {"p", 4, "state count when no environment is given"},
         {"length", 8, "kernels per window (N)"},
         {"zero_prob", 0.2, "probability of a zero entry in generated kernels"}},
        false,
        "checks: check, instance, k, n, N, lhs, rhs, slack, pass "
        "(jsonl: check, params{instance,k,n,N}, lhs, rhs, slack, pass)"},
       run_contract_check},
      {{"leslie-audit",
        "Condition report and closed-form triplet for a Leslie environment",
        {{"samples", 200, "sampled trajectories for the horizon-bounded conditions"},
         {"horizon", 40, "trajectory length for d'' and d_horizon"},
         {"triplet_horizon", 40, "future kernels used by the closed-form triplet"}},
        true,
        "(json reports only)"},
       run_leslie_audit},
      {{"counterexample",
        "Constant Leslie kernel on squared-block marks with vanishing coupling",
        {{"a", 9.0, "mass on marked ages"},
         {"delta", 0.1, "fertility share"},
         {"K", 3200, "number of ages"},
         {"n_verify", 20, "largest n in the log-ratio check"},
         {"d_horizon", 60, "largest N_max for d_horizon(delta_0)"}},
        false,
        "counterexample: n, lhs_log_ratio, rhs_log_bound; d_series: n_max, d_horizon"},
       run_counterexample},
      {{"critical",
        "Centering, oscillation verdicts and the null-homology heuristic",
        {{"lambda", nan, "exponent used for centering (estimated when absent)"},
         {"lambda_n", 10000, "trajectory length when lambda is estimated"},
         {"n", 100000, "trajectory length"},
         {"threshold", 5.0, "level that counts as a crossing"},
         {"reference_n", 0, "index for max |S_n - S_ref| (0 = off)"},
         {"nh_n", 4096, "trajectory length of the NH diagnostic"},
         {"match_tol", 0.05, "TV closeness for NH pairs"},
         {"min_pairs", 10, "minimal close pairs per checkpoint"}},
        true,
        "oscillation: replica, max_s, min_s, final_s, first_up, first_down "
        "(-1 = never), max_dev_after_reference, verdict"},
       run_critical},
      {{"hilbert-compare",
        "Doeblin versus Birkhoff contraction on random positive instances",
        {{"instances", 200, "number of random instances"},
         {"p", 4, "state count"},
         {"window", 8, "kernels per instance"},
         {"k", 3, "product length of the Hennion bound"},
         {"pairs", 32, "random pairs for the Hilbert factor"},
         {"leslie_p", 12, "largest Leslie size in the zero-pattern check"},
         {"leslie_n", 10, "largest product length in the zero-pattern check"}},
        false,
        "comparison: instance_id, gamma, one_minus_gamma, tau_birkhoff, observed_tv_factor, "
        "observed_hilbert_factor; hennion: instance_id, hennion_bound, d_horizon_min, pass; "
        "leslie_pattern: p, n, zero_entries, matches_prediction, uniformly_positive"},
       run_hilbert_compare},
  };
}

json parse_flag_value(const std::string& name, const std::string& text) {
  try {
    json v = json::parse(text);
    if (!v.is_number()) throw InvalidInput("");
    return v;
  } catch (...) {
    throw InvalidInput("--" + name + ": expected a number, got \"" + text + "\"");
  }
}

Context build_context(const Command& cmd, const Common& c) {
  Context ctx;
  json cfg = json::object();
  fs::path base = ".";
  if (!c.config.empty()) {
    cfg = read_json_file(c.config);
    reject_unknown_fields(cfg, {"command", "env", "seed", "replicas", "threads", "out", "format",
                                "params"},
                          "config");
    base = fs::path(c.config).parent_path();
    if (cfg.contains("command") && cfg["command"] != cmd.name) {
      throw InvalidInput("config is for command " + cfg["command"].dump());
    }
  }

  for (const auto& p : cmd.params) ctx.params[p.name] = p.fallback;
  if (cfg.contains("params")) {
    std::vector<std::string> names;
    for (const auto& p : cmd.params) names.push_back(p.name);
    reject_unknown_fields(cfg["params"], names, "params");
    for (const auto& [k, v] : cfg["params"].items()) {
      if (!v.is_number()) throw InvalidInput("params." + k + " must be a number");
      ctx.params[k] = v;
    }
  }
  for (const auto& [k, v] : c.flags) ctx.params[k] = parse_flag_value(k, v);

  std::optional<EnvironmentSpec> spec;
  if (!c.env.empty()) {
    spec = environment_from_json(read_json_file(c.env));
  } else if (cfg.contains("env")) {
    const json& e = cfg["env"];
    spec = e.is_string() ? environment_from_json(read_json_file((base / e.get<std::string>()).string()))
                         : environment_from_json(e);
  }
  ctx.spec = spec;
  if (cmd.needs_env && !spec) throw InvalidInput(cmd.name + " needs --env or an \"env\" entry");

  auto get_u64 = [&](const char* key) -> std::optional<std::uint64_t> {
    if (!cfg.contains(key)) return std::nullopt;
    if (!cfg[key].is_number_unsigned()) throw InvalidInput(std::string(key) + " must be a nonnegative integer");
    return cfg[key].get<std::uint64_t>();
  };
  ctx.seed = c.seed ? *c.seed : get_u64("seed").value_or(spec ? spec->seed() : 0);
  ctx.replicas = c.replicas ? *c.replicas : get_u64("replicas").value_or(0);
  unsigned threads = c.threads ? *c.threads : static_cast<unsigned>(get_u64("threads").value_or(1));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  ctx.threads = threads;
  std::string out = !c.out.empty() ? c.out : cfg.value("out", std::string("."));
  std::string format = !c.format.empty() ? c.format : cfg.value("format", std::string("csv"));
  ctx.format = parse_format(format);
  ctx.out = out;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw InvalidInput("cannot create output directory " + out + ": " + ec.message());
  return ctx;
}

std::size_t default_replicas(const std::string& name) {
  if (name == "stationary") return 1000;
  if (name == "critical") return 100;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kprod: products of random positive kernels", "kprod"};
  app.require_subcommand(1);
  const auto table = commands();
  std::vector<Common> commons(table.size());
  std::vector<std::map<std::string, std::string>> raw(table.size());
  std::vector<CLI::App*> subs;

  for (std::size_t i = 0; i < table.size(); ++i) {
    const Command& cmd = table[i].cmd;
    Common& c = commons[i];
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", c.config, "JSON run configuration");
    sub->add_option("--env", c.env, "environment spec JSON file");
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--replicas", c.replicas, "number of replicas");
    sub->add_option("--threads", c.threads, "worker threads (0 = all cores)");
    sub->add_option("--out", c.out, "output directory (default .)");
    sub->add_option("--format", c.format, "csv or jsonl (default csv)");
    for (const auto& p : cmd.params) {
      std::string label = "--" + p.name;
      std::replace(label.begin() + 2, label.end(), '_', '-');
      sub->add_option(label, raw[i][p.name],
                      p.help + " (default " +
                          (p.fallback.is_number_float() && std::isnan(p.fallback.get<double>())
                               ? std::string("none")
                               : p.fallback.dump()) +
                          ")");
    }
    sub->footer("Columns: " + cmd.columns);
    subs.push_back(sub);
  }

  // `kprod --config run.json ...` takes the subcommand from the config.
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && args[0] == "--config" && args.size() >= 2) {
    try {
      const json cfg = read_json_file(args[1]);
      if (!cfg.is_object() || !cfg.contains("command") || !cfg["command"].is_string()) {
        throw InvalidInput("config without a \"command\" string needs an explicit subcommand");
      }
      args.insert(args.begin(), cfg["command"].get<std::string>());
    } catch (const std::exception& e) {
      std::cerr << "invalid input: " << e.what() << '\n';
      return kExitInvalid;
    }
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const Entry& entry = table[i];
    Common c = commons[i];
    for (const auto& p : entry.cmd.params) {
      std::string label = "--" + p.name;
      std::replace(label.begin() + 2, label.end(), '_', '-');
      if (subs[i]->count(label) > 0) c.flags[p.name] = raw[i][p.name];
    }
    try {
      Context ctx = build_context(entry.cmd, c);
      if (ctx.replicas == 0) ctx.replicas = default_replicas(entry.cmd.name);
      const Outcome o = entry.run(ctx);
      print_summary(entry.cmd.name, o.summary);
      return o.code;
    } catch (const AssumptionViolation& e) {
      std::cerr << "assumption failure: " << e.what() << '\n';
      return kExitAssumption;
    } catch (const MassAnnihilated& e) {
      std::cerr << "assumption failure: " << e.what() << '\n';
      return kExitAssumption;
    } catch (const NoCoupling& e) {
      std::cerr << "assumption failure: " << e.what() << '\n';
      return kExitAssumption;
    } catch (const std::invalid_argument& e) {
      std::cerr << "invalid input: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const EndOfScript& e) {
      std::cerr << "invalid input: " << e.what() << '\n';
      return kExitInvalid;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitInvalid;
    }
  }
  return kExitInvalid;
}
