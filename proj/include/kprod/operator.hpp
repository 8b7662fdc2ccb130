#pragma once

// Finite-dimensional operator calculus: nonnegative kernels acting on the
// left on (signed) measures and on the right on bounded functions.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kprod/errors.hpp"

namespace kprod {

/// Largest state-space size for which dense storage is permitted.
inline constexpr std::size_t kMaxDenseSize = 512;

/// Relative tolerance used for floating equality assertions.
inline constexpr double kRelTol = 1e-12;

/// Weights mu(x) over states 0..p-1. A row vector for the left action.
class Measure {
 public:
  Measure() = default;
  explicit Measure(std::size_t p, double fill = 0.0) : w_(p, fill) {}
  explicit Measure(std::vector<double> w) : w_(std::move(w)) {}

  static Measure dirac(std::size_t p, std::size_t x);
  static Measure uniform(std::size_t p);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t x) const { return w_[x]; }
  double& operator[](std::size_t x) { return w_[x]; }
  const std::vector<double>& weights() const noexcept { return w_; }
  std::span<const double> span() const noexcept { return w_; }

  /// mu(X), the signed total mass.
  double mass() const;
  /// sum_x |mu(x)|.
  double tv_norm() const;
  bool is_nonnegative() const;
  /// Copy rescaled to unit mass. Requires positive mass.
  Measure normalized() const;

 private:
  std::vector<double> w_;
};

/// Values f(x) over states 0..p-1. A column vector for the right action.
class Function {
 public:
  Function() = default;
  explicit Function(std::size_t p, double fill = 0.0) : v_(p, fill) {}
  explicit Function(std::vector<double> v) : v_(std::move(v)) {}

  static Function ones(std::size_t p) { return Function(p, 1.0); }
  static Function indicator(std::size_t p, std::size_t y);

  std::size_t size() const noexcept { return v_.size(); }
  double operator[](std::size_t x) const { return v_[x]; }
  double& operator[](std::size_t x) { return v_[x]; }
  const std::vector<double>& values() const noexcept { return v_; }

  double sup_norm() const;

 private:
  std::vector<double> v_;
};

enum class Storage { dense, leslie };

/// A p x p nonnegative kernel. Leslie storage keeps only the first column f
/// and the superdiagonal s; entry (x, x+1) is s[x] and s[p-1] is always 0.
class Kernel {
 public:
  static Kernel dense(std::size_t p, std::vector<double> row_major);
  static Kernel dense(const std::vector<std::vector<double>>& rows);
  /// Truncated Leslie kernel. s must have the same length as f; its last
  /// entry is forced to 0 by the truncation.
  static Kernel leslie(std::vector<double> f, std::vector<double> s);
  static Kernel identity(std::size_t p);
  static Kernel ones(std::size_t p);

  std::size_t size() const noexcept { return p_; }
  Storage storage() const noexcept { return storage_; }
  bool is_leslie() const noexcept { return storage_ == Storage::leslie; }

  double operator()(std::size_t x, std::size_t y) const;
  double row_sum(std::size_t x) const;
  /// m(x) = (Q 1)(x).
  Function mass() const;
  /// |||Q||| = max_x row_sum(x).
  double op_norm() const;
  /// First state whose row is identically zero, if any.
  std::optional<std::size_t> zero_row() const;
  bool all_positive() const;

  Kernel scaled(double a) const;
  std::vector<double> to_dense() const;

  /// Leslie coefficients; empty for dense kernels.
  const std::vector<double>& fertility() const noexcept { return f_; }
  const std::vector<double>& survival() const noexcept { return s_; }
  /// Row-major entries; empty for Leslie kernels.
  const std::vector<double>& entries() const noexcept { return a_; }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  Kernel() = default;

  std::size_t p_ = 0;
  Storage storage_ = Storage::dense;
  std::vector<double> a_;
  std::vector<double> f_;
  std::vector<double> s_;
};

/// (mu Q)(y) = sum_x mu(x) Q(x,y).
Measure act_left(const Measure& mu, const Kernel& q);
/// (Q f)(x) = sum_y Q(x,y) f(y).
Function act_right(const Kernel& q, const Function& f);
/// Kernel product (Q1 Q2)(x,y) = sum_z Q1(x,z) Q2(z,y). The result is dense,
/// so both sizes must be at most kMaxDenseSize.
Kernel compose(const Kernel& q1, const Kernel& q2);
/// mu(f) = sum_x mu(x) f(x).
double pair(const Measure& mu, const Function& f);
/// sum_x |mu1(x) - mu2(x)|.
double tv_distance(const Measure& mu1, const Measure& mu2);

struct ProjectiveStep {
  Measure measure;  ///< mu Q / ||mu Q||, a probability vector
  double log_norm;  ///< log ||mu Q||_TV
};

/// Projective action mu . Q for a nonnegative, nonzero mu.
/// Throws MassAnnihilated when mu Q = 0.
ProjectiveStep projective_step(const Measure& mu, const Kernel& q);

/// Dense p x p matrix carried as normalized values times exp(log_scale).
/// Used for long products whose entries over- or underflow.
struct LogMatrix {
  std::size_t p = 0;
  std::vector<double> values;  ///< row-major, max entry 1 unless all zero
  double log_scale = 0.0;

  double log_entry(std::size_t x, std::size_t y) const;
  double entry(std::size_t x, std::size_t y) const;
  static LogMatrix identity(std::size_t p);
  void renormalize();
};

/// Vector carried as normalized values times exp(log_scale).
struct LogVector {
  std::vector<double> values;  ///< max entry 1 unless all zero
  double log_scale = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  double log_at(std::size_t x) const;
  double at(std::size_t x) const;
  /// log of max_x, i.e. log ||v||_inf for nonnegative v.
  double log_sup() const;
  void renormalize();
};

/// X <- X Q, renormalized. Works for dense and Leslie kernels.
void right_multiply(LogMatrix& x, const Kernel& q);
/// X <- Q X, renormalized.
void left_multiply(const Kernel& q, LogMatrix& x);
/// v <- Q v, renormalized.
void apply_right(const Kernel& q, LogVector& v);

/// log mu(v) for nonnegative mu and v in log form. -inf when zero.
double log_pair(const Measure& mu, const LogVector& v);

/// Ordered kernel list M_k, ..., M_{N-1} indexed by absolute time. Products
/// and mass functions are materialized lazily in log-normalized form.
class ProductWindow {
 public:
  ProductWindow(std::vector<Kernel> kernels, std::size_t first_index = 0);

  std::size_t begin() const noexcept { return first_; }
  std::size_t end() const noexcept { return first_ + kernels_.size(); }
  std::size_t dim() const noexcept { return p_; }
  const Kernel& kernel(std::size_t i) const;

  /// M_{k,n} = M_k ... M_{n-1}; identity when k == n.
  LogMatrix product(std::size_t k, std::size_t n) const;
  /// m_{k,n} = M_{k,n} 1 by backward recursion.
  LogVector mass(std::size_t k, std::size_t n) const;
  /// m_{k,n} for every n in [k, last], index n - k.
  std::vector<LogVector> masses_from(std::size_t k, std::size_t last) const;
  std::vector<LogVector> masses_from(std::size_t k) const { return masses_from(k, end()); }
  /// log |||M_{k,n}||| = log ||m_{k,n}||_inf.
  double log_op_norm(std::size_t k, std::size_t n) const;
  /// mu M_{k,n} as a probability vector plus log of its mass.
  ProjectiveStep push(const Measure& mu, std::size_t k, std::size_t n) const;

 private:
  void check_range(std::size_t k, std::size_t n) const;

  std::vector<Kernel> kernels_;
  std::size_t first_;
  std::size_t p_;
};

}  // namespace kprod
