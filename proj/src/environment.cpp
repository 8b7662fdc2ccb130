#include "kprod/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kprod/rng.hpp"

namespace kprod {

namespace {

constexpr double kSumTol = 1e-9;

std::vector<double> cumulate(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  c.back() = 1.0;
  return c;
}

std::size_t pick(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

void check_probability_vector(const std::vector<double>& w, const char* what) {
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidInput(std::string(what) + ": entries must be finite and >= 0");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kSumTol) {
    throw InvalidInput(std::string(what) + ": entries must sum to 1");
  }
}

bool irreducible(const std::vector<std::vector<double>>& t) {
  const std::size_t r = t.size();
  for (std::size_t start = 0; start < r; ++start) {
    std::vector<bool> seen(r, false);
    std::vector<std::size_t> todo{start};
    seen[start] = true;
    while (!todo.empty()) {
      const std::size_t i = todo.back();
      todo.pop_back();
      for (std::size_t j = 0; j < r; ++j) {
        if (t[i][j] > 0.0 && !seen[j]) {
          seen[j] = true;
          todo.push_back(j);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

// Power iteration on the lazy chain (P + I)/2, which shares the stationary
// law of P and converges even when P is periodic.
std::vector<double> stationary_law(const std::vector<std::vector<double>>& t) {
  const std::size_t r = t.size();
  std::vector<double> pi(r, 1.0 / static_cast<double>(r));
  for (int it = 0; it < 100000; ++it) {
    std::vector<double> next(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
      next[i] += 0.5 * pi[i];
      for (std::size_t j = 0; j < r; ++j) next[j] += 0.5 * pi[i] * t[i][j];
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < r; ++i) diff += std::abs(next[i] - pi[i]);
    pi = std::move(next);
    if (diff < 1e-15) break;
  }
  const double s = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& x : pi) x /= s;
  return pi;
}

constexpr std::uint64_t kInitialCounter = 0xFFFFFFFFFFFFFFFFULL;

}  // namespace

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::iid: return "iid";
    case EnvKind::markov: return "markov";
    case EnvKind::periodic: return "periodic";
    case EnvKind::scripted: return "scripted";
  }
  return "unknown";
}

void EnvironmentSpec::validate_family() const {
  if (family_.empty()) throw InvalidInput("environment needs at least one kernel");
  const std::size_t p = family_.front().size();
  for (const auto& k : family_) {
    if (k.size() != p) throw DimensionError("environment kernels differ in size");
  }
}

EnvironmentSpec EnvironmentSpec::iid(std::vector<Kernel> family, std::vector<double> weights,
                                     std::uint64_t seed) {
  EnvironmentSpec s;
  s.kind_ = EnvKind::iid;
  s.seed_ = seed;
  s.family_ = std::move(family);
  s.validate_family();
  if (weights.size() != s.family_.size()) {
    throw InvalidInput("iid environment: one weight per kernel required");
  }
  check_probability_vector(weights, "iid weights");
  s.cumulative_ = cumulate(weights);
  s.stationary_ = weights;
  s.weights_ = std::move(weights);
  return s;
}

EnvironmentSpec EnvironmentSpec::constant(Kernel k, std::uint64_t seed) {
  std::vector<Kernel> fam;
  fam.push_back(std::move(k));
  return iid(std::move(fam), {1.0}, seed);
}

EnvironmentSpec EnvironmentSpec::markov(std::vector<Kernel> family,
                                        std::vector<std::vector<double>> transition,
                                        std::uint64_t seed) {
  EnvironmentSpec s;
  s.kind_ = EnvKind::markov;
  s.seed_ = seed;
  s.family_ = std::move(family);
  s.validate_family();
  if (transition.size() != s.family_.size()) {
    throw InvalidInput("markov environment: transition must be r x r with r kernels");
  }
  for (const auto& row : transition) {
    if (row.size() != transition.size()) throw InvalidInput("markov transition not square");
    check_probability_vector(row, "markov transition row");
    s.transition_cumulative_.push_back(cumulate(row));
  }
  if (!irreducible(transition)) {
    throw InvalidInput("markov environment chain is not irreducible");
  }
  s.stationary_ = stationary_law(transition);
  s.cumulative_ = cumulate(s.stationary_);
  s.transition_ = std::move(transition);
  return s;
}

EnvironmentSpec EnvironmentSpec::periodic(std::vector<Kernel> cycle, std::uint64_t seed) {
  EnvironmentSpec s;
  s.kind_ = EnvKind::periodic;
  s.seed_ = seed;
  s.family_ = std::move(cycle);
  s.validate_family();
  s.stationary_.assign(s.family_.size(), 1.0 / static_cast<double>(s.family_.size()));
  return s;
}

EnvironmentSpec EnvironmentSpec::scripted(std::vector<Kernel> kernels, std::uint64_t seed) {
  EnvironmentSpec s;
  s.kind_ = EnvKind::scripted;
  s.seed_ = seed;
  s.family_ = std::move(kernels);
  s.validate_family();
  return s;
}

EnvironmentSpec EnvironmentSpec::with_seed(std::uint64_t seed) const {
  EnvironmentSpec s(*this);
  s.seed_ = seed;
  return s;
}

EnvironmentSpec EnvironmentSpec::scaled(double a) const {
  EnvironmentSpec s(*this);
  for (auto& k : s.family_) k = k.scaled(a);
  return s;
}

EnvironmentStream::EnvironmentStream(EnvironmentSpec spec)
    : spec_(std::make_shared<const EnvironmentSpec>(std::move(spec))) {
  if (spec_->kind_ == EnvKind::markov) {
    state_ = pick(spec_->cumulative_, counter_uniform(spec_->seed_, kInitialCounter));
  }
}

std::size_t EnvironmentStream::index_at(std::size_t n) const {
  const auto& s = *spec_;
  switch (s.kind_) {
    case EnvKind::iid:
      if (s.family_.size() == 1) return 0;
      return pick(s.cumulative_, counter_uniform(s.seed_, n));
    case EnvKind::markov:
      return state_;
    case EnvKind::periodic:
      return n % s.family_.size();
    case EnvKind::scripted:
      if (n >= s.family_.size()) throw EndOfScript();
      return n;
  }
  return 0;
}

void EnvironmentStream::advance() {
  if (spec_->kind_ == EnvKind::markov) {
    const double u = counter_uniform(spec_->seed_, cursor_ + 1);
    state_ = pick(spec_->transition_cumulative_[state_], u);
  }
  ++cursor_;
}

std::size_t EnvironmentStream::peek_index() const { return index_at(cursor_); }

const Kernel& EnvironmentStream::next() {
  const std::size_t i = index_at(cursor_);
  advance();
  return spec_->family_[i];
}

EnvironmentStream EnvironmentStream::spawn_shifted(std::size_t k) const {
  EnvironmentStream out(*this);
  if (spec_->kind_ == EnvKind::markov) {
    for (std::size_t j = 0; j < k; ++j) out.advance();
  } else {
    out.cursor_ += k;
  }
  return out;
}

std::vector<Kernel> EnvironmentStream::take(std::size_t n) {
  std::vector<Kernel> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

AssumptionReport check_basic_assumptions(const EnvironmentSpec& spec) {
  AssumptionReport r;
  const auto& fam = spec.family();
  for (std::size_t i = 0; i < fam.size(); ++i) {
    if (spec.kind() == EnvKind::iid && spec.weights()[i] == 0.0) continue;
    if (auto x = fam[i].zero_row()) {
      if (r.assumption2) {
        r.offending_kernel = i;
        r.offending_state = *x;
        r.message = "Assumption 2 violated: kernel " + std::to_string(i) +
                    " has a zero row at state " + std::to_string(*x);
      }
      r.assumption2 = false;
      ++r.violations;
    }
    const double norm = fam[i].op_norm();
    if (!std::isfinite(std::log(norm))) {
      r.assumption3_plus = false;
      if (!std::isfinite(norm)) r.assumption3 = false;
    }
  }
  if (r.assumption2 && r.message.empty()) r.message = "all kernels have positive row sums";
  return r;
}

}  // namespace kprod
