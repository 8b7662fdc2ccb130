#pragma once

// Stationary kernel sequences M_n = M o theta^n. Draw n of a stream depends
// only on (seed, n) and, for Markov environments, on the previous state, so
// shifting a stream is a replay rather than a re-seed.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kprod/operator.hpp"

namespace kprod {

enum class EnvKind { iid, markov, periodic, scripted };

std::string to_string(EnvKind kind);

class EnvironmentSpec {
 public:
  /// i.i.d. draws from `family` with probabilities `weights`.
  static EnvironmentSpec iid(std::vector<Kernel> family, std::vector<double> weights,
                             std::uint64_t seed = 0);
  /// Constant environment: the one-member i.i.d. family.
  static EnvironmentSpec constant(Kernel k, std::uint64_t seed = 0);
  /// Environment chain on {0..r-1}; in state i the kernel is family[i]. The
  /// chain starts from its stationary law. Must be irreducible.
  static EnvironmentSpec markov(std::vector<Kernel> family,
                                std::vector<std::vector<double>> transition,
                                std::uint64_t seed = 0);
  /// Deterministic cycle family[0], family[1], ..., repeated.
  static EnvironmentSpec periodic(std::vector<Kernel> cycle, std::uint64_t seed = 0);
  /// Explicit finite list; the stream ends after the last kernel.
  static EnvironmentSpec scripted(std::vector<Kernel> kernels, std::uint64_t seed = 0);

  EnvKind kind() const noexcept { return kind_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t dim() const noexcept { return family_.front().size(); }
  bool is_iid() const noexcept { return kind_ == EnvKind::iid; }
  bool is_deterministic() const noexcept {
    return kind_ == EnvKind::periodic || kind_ == EnvKind::scripted;
  }

  const std::vector<Kernel>& family() const noexcept { return family_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<std::vector<double>>& transition() const noexcept { return transition_; }
  /// Stationary law of the environment chain (Markov), weights (i.i.d.),
  /// uniform over the cycle (periodic), empty for scripted.
  const std::vector<double>& stationary() const noexcept { return stationary_; }

  EnvironmentSpec with_seed(std::uint64_t seed) const;
  /// Every kernel multiplied by a.
  EnvironmentSpec scaled(double a) const;

 private:
  EnvironmentSpec() = default;
  void validate_family() const;

  EnvKind kind_ = EnvKind::iid;
  std::uint64_t seed_ = 0;
  std::vector<Kernel> family_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<std::vector<double>> transition_;
  std::vector<std::vector<double>> transition_cumulative_;
  std::vector<double> stationary_;

  friend class EnvironmentStream;
};

class EnvironmentStream {
 public:
  explicit EnvironmentStream(EnvironmentSpec spec);

  /// M_n for the current cursor n, then advances. Throws EndOfScript.
  const Kernel& next();
  /// Family index that next() would return, without advancing.
  std::size_t peek_index() const;
  /// Stream whose j-th output is this stream's (cursor + k + j)-th output.
  EnvironmentStream spawn_shifted(std::size_t k) const;
  /// The next n kernels, advancing the stream.
  std::vector<Kernel> take(std::size_t n);

  std::size_t cursor() const noexcept { return cursor_; }
  const EnvironmentSpec& spec() const noexcept { return *spec_; }

 private:
  std::size_t index_at(std::size_t n) const;
  void advance();

  std::shared_ptr<const EnvironmentSpec> spec_;
  std::size_t cursor_ = 0;
  std::size_t state_ = 0;  // Markov state at cursor_
};

struct AssumptionReport {
  bool exact = true;  ///< false when verdicts rest on sampling
  bool assumption2 = true;
  bool assumption3 = true;
  bool assumption3_plus = true;
  std::size_t violations = 0;
  std::optional<std::size_t> offending_kernel;
  std::optional<std::size_t> offending_state;
  std::string message;
};

/// Positivity of every mass function m_{0,1} and integrability of
/// log ||m_{0,1}||. Exact, since every supported family is finite.
AssumptionReport check_basic_assumptions(const EnvironmentSpec& spec);

}  // namespace kprod
