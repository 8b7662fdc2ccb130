#include "kprod/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace kprod {

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size " + std::to_string(a) +
                         " vs " + std::to_string(b));
  }
}

void require_entry(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InvalidInput("kernel entries must be finite and nonnegative");
  }
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

// --- Measure / Function -----------------------------------------------------

Measure Measure::dirac(std::size_t p, std::size_t x) {
  if (x >= p) throw DimensionError("dirac: state out of range");
  Measure m(p);
  m[x] = 1.0;
  return m;
}

Measure Measure::uniform(std::size_t p) {
  if (p == 0) throw InvalidInput("uniform: empty state space");
  return Measure(p, 1.0 / static_cast<double>(p));
}

double Measure::mass() const { return std::accumulate(w_.begin(), w_.end(), 0.0); }

double Measure::tv_norm() const {
  double s = 0.0;
  for (double x : w_) s += std::abs(x);
  return s;
}

bool Measure::is_nonnegative() const {
  return std::all_of(w_.begin(), w_.end(), [](double x) { return x >= 0.0; });
}

Measure Measure::normalized() const {
  const double m = mass();
  if (!(m > 0.0)) throw MassAnnihilated();
  Measure out(*this);
  for (double& x : out.w_) x /= m;
  return out;
}

Function Function::indicator(std::size_t p, std::size_t y) {
  if (y >= p) throw DimensionError("indicator: state out of range");
  Function f(p);
  f[y] = 1.0;
  return f;
}

double Function::sup_norm() const { return max_abs(v_); }

// --- Kernel -----------------------------------------------------------------

Kernel Kernel::dense(std::size_t p, std::vector<double> row_major) {
  if (p == 0) throw InvalidInput("kernel size must be positive");
  if (p > kMaxDenseSize) {
    throw InvalidInput("dense storage limited to p <= " + std::to_string(kMaxDenseSize) +
                       "; use Leslie storage");
  }
  if (row_major.size() != p * p) throw DimensionError("dense kernel: entries != p*p");
  for (double v : row_major) require_entry(v);
  Kernel k;
  k.p_ = p;
  k.storage_ = Storage::dense;
  k.a_ = std::move(row_major);
  return k;
}

Kernel Kernel::dense(const std::vector<std::vector<double>>& rows) {
  const std::size_t p = rows.size();
  std::vector<double> flat;
  flat.reserve(p * p);
  for (const auto& r : rows) {
    if (r.size() != p) throw DimensionError("dense kernel: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return dense(p, std::move(flat));
}

Kernel Kernel::leslie(std::vector<double> f, std::vector<double> s) {
  if (f.empty()) throw InvalidInput("Leslie kernel needs at least one age class");
  if (f.size() != s.size()) throw DimensionError("Leslie kernel: |f| != |s|");
  for (double v : f) require_entry(v);
  for (double v : s) require_entry(v);
  s.back() = 0.0;
  Kernel k;
  k.p_ = f.size();
  k.storage_ = Storage::leslie;
  k.f_ = std::move(f);
  k.s_ = std::move(s);
  return k;
}

Kernel Kernel::identity(std::size_t p) {
  std::vector<double> a(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) a[i * p + i] = 1.0;
  return dense(p, std::move(a));
}

Kernel Kernel::ones(std::size_t p) { return dense(p, std::vector<double>(p * p, 1.0)); }

double Kernel::operator()(std::size_t x, std::size_t y) const {
  if (x >= p_ || y >= p_) throw DimensionError("kernel index out of range");
  if (storage_ == Storage::dense) return a_[x * p_ + y];
  double v = 0.0;
  if (y == 0) v += f_[x];
  if (y == x + 1) v += s_[x];
  return v;
}

double Kernel::row_sum(std::size_t x) const {
  if (storage_ == Storage::leslie) return f_[x] + s_[x];
  const double* row = a_.data() + x * p_;
  return std::accumulate(row, row + p_, 0.0);
}

Function Kernel::mass() const {
  Function m(p_);
  for (std::size_t x = 0; x < p_; ++x) m[x] = row_sum(x);
  return m;
}

double Kernel::op_norm() const { return mass().sup_norm(); }

std::optional<std::size_t> Kernel::zero_row() const {
  for (std::size_t x = 0; x < p_; ++x) {
    if (row_sum(x) == 0.0) return x;
  }
  return std::nullopt;
}

bool Kernel::all_positive() const {
  if (storage_ == Storage::leslie) {
    // Only a 1x1 or 2x2 Leslie block can be entrywise positive, and the
    // truncation zeroes s[p-1], so only p == 1 with f[0] > 0 qualifies.
    return p_ == 1 && f_[0] > 0.0;
  }
  return std::all_of(a_.begin(), a_.end(), [](double v) { return v > 0.0; });
}

Kernel Kernel::scaled(double a) const {
  if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("scale must be finite, >= 0");
  Kernel k(*this);
  for (double& v : k.a_) v *= a;
  for (double& v : k.f_) v *= a;
  for (double& v : k.s_) v *= a;
  return k;
}

std::vector<double> Kernel::to_dense() const {
  if (storage_ == Storage::dense) return a_;
  if (p_ > kMaxDenseSize) throw InvalidInput("to_dense: kernel too large for dense storage");
  std::vector<double> a(p_ * p_, 0.0);
  for (std::size_t x = 0; x < p_; ++x) {
    a[x * p_] += f_[x];
    if (x + 1 < p_) a[x * p_ + x + 1] += s_[x];
  }
  return a;
}

// --- Actions ----------------------------------------------------------------

Measure act_left(const Measure& mu, const Kernel& q) {
  require_same(mu.size(), q.size(), "act_left");
  const std::size_t p = q.size();
  Measure out(p);
  if (q.is_leslie()) {
    const auto& f = q.fertility();
    const auto& s = q.survival();
    for (std::size_t x = 0; x < p; ++x) {
      out[0] += mu[x] * f[x];
      if (x + 1 < p) out[x + 1] += mu[x] * s[x];
    }
    return out;
  }
  const auto& a = q.entries();
  for (std::size_t x = 0; x < p; ++x) {
    const double w = mu[x];
    if (w == 0.0) continue;
    const double* row = a.data() + x * p;
    for (std::size_t y = 0; y < p; ++y) out[y] += w * row[y];
  }
  return out;
}

Function act_right(const Kernel& q, const Function& f) {
  require_same(q.size(), f.size(), "act_right");
  const std::size_t p = q.size();
  Function out(p);
  if (q.is_leslie()) {
    const auto& fe = q.fertility();
    const auto& s = q.survival();
    for (std::size_t x = 0; x < p; ++x) {
      out[x] = fe[x] * f[0] + (x + 1 < p ? s[x] * f[x + 1] : 0.0);
    }
    return out;
  }
  const auto& a = q.entries();
  for (std::size_t x = 0; x < p; ++x) {
    const double* row = a.data() + x * p;
    double acc = 0.0;
    for (std::size_t y = 0; y < p; ++y) acc += row[y] * f[y];
    out[x] = acc;
  }
  return out;
}

Kernel compose(const Kernel& q1, const Kernel& q2) {
  require_same(q1.size(), q2.size(), "compose");
  const std::size_t p = q1.size();
  const std::vector<double> a = q1.to_dense();
  const std::vector<double> b = q2.to_dense();
  std::vector<double> c(p * p, 0.0);
  for (std::size_t x = 0; x < p; ++x) {
    for (std::size_t z = 0; z < p; ++z) {
      const double w = a[x * p + z];
      if (w == 0.0) continue;
      for (std::size_t y = 0; y < p; ++y) c[x * p + y] += w * b[z * p + y];
    }
  }
  return Kernel::dense(p, std::move(c));
}

double pair(const Measure& mu, const Function& f) {
  require_same(mu.size(), f.size(), "pair");
  double acc = 0.0;
  for (std::size_t x = 0; x < mu.size(); ++x) acc += mu[x] * f[x];
  return acc;
}

double tv_distance(const Measure& mu1, const Measure& mu2) {
  require_same(mu1.size(), mu2.size(), "tv_distance");
  double acc = 0.0;
  for (std::size_t x = 0; x < mu1.size(); ++x) acc += std::abs(mu1[x] - mu2[x]);
  return acc;
}

ProjectiveStep projective_step(const Measure& mu, const Kernel& q) {
  Measure image = act_left(mu, q);
  const double norm = image.tv_norm();
  if (!(norm > 0.0)) throw MassAnnihilated();
  for (std::size_t y = 0; y < image.size(); ++y) image[y] /= norm;
  return {std::move(image), std::log(norm)};
}

// --- Log-normalized containers ---------------------------------------------

double LogMatrix::log_entry(std::size_t x, std::size_t y) const {
  return std::log(values[x * p + y]) + log_scale;
}

double LogMatrix::entry(std::size_t x, std::size_t y) const {
  return values[x * p + y] * std::exp(log_scale);
}

LogMatrix LogMatrix::identity(std::size_t p) {
  LogMatrix m;
  m.p = p;
  m.values.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) m.values[i * p + i] = 1.0;
  return m;
}

void LogMatrix::renormalize() {
  const double m = max_abs(values);
  if (m == 0.0 || m == 1.0) return;
  for (double& v : values) v /= m;
  log_scale += std::log(m);
}

double LogVector::log_at(std::size_t x) const { return std::log(values[x]) + log_scale; }

double LogVector::at(std::size_t x) const { return values[x] * std::exp(log_scale); }

double LogVector::log_sup() const { return std::log(max_abs(values)) + log_scale; }

void LogVector::renormalize() {
  const double m = max_abs(values);
  if (m == 0.0 || m == 1.0) return;
  for (double& v : values) v /= m;
  log_scale += std::log(m);
}

void right_multiply(LogMatrix& x, const Kernel& q) {
  require_same(x.p, q.size(), "right_multiply");
  const std::size_t p = x.p;
  std::vector<double> out(p * p, 0.0);
  if (q.is_leslie()) {
    const auto& f = q.fertility();
    const auto& s = q.survival();
    for (std::size_t r = 0; r < p; ++r) {
      const double* row = x.values.data() + r * p;
      double* o = out.data() + r * p;
      double acc = 0.0;
      for (std::size_t z = 0; z < p; ++z) {
        acc += row[z] * f[z];
        if (z + 1 < p) o[z + 1] = row[z] * s[z];
      }
      o[0] = acc;
    }
  } else {
    const auto& a = q.entries();
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t z = 0; z < p; ++z) {
        const double w = x.values[r * p + z];
        if (w == 0.0) continue;
        const double* qrow = a.data() + z * p;
        double* o = out.data() + r * p;
        for (std::size_t y = 0; y < p; ++y) o[y] += w * qrow[y];
      }
    }
  }
  x.values = std::move(out);
  x.renormalize();
}

void left_multiply(const Kernel& q, LogMatrix& x) {
  require_same(x.p, q.size(), "left_multiply");
  const std::size_t p = x.p;
  std::vector<double> out(p * p, 0.0);
  if (q.is_leslie()) {
    const auto& f = q.fertility();
    const auto& s = q.survival();
    for (std::size_t r = 0; r < p; ++r) {
      double* o = out.data() + r * p;
      const double* row0 = x.values.data();
      for (std::size_t y = 0; y < p; ++y) o[y] = f[r] * row0[y];
      if (r + 1 < p && s[r] != 0.0) {
        const double* next = x.values.data() + (r + 1) * p;
        for (std::size_t y = 0; y < p; ++y) o[y] += s[r] * next[y];
      }
    }
  } else {
    const auto& a = q.entries();
    for (std::size_t r = 0; r < p; ++r) {
      double* o = out.data() + r * p;
      for (std::size_t z = 0; z < p; ++z) {
        const double w = a[r * p + z];
        if (w == 0.0) continue;
        const double* xrow = x.values.data() + z * p;
        for (std::size_t y = 0; y < p; ++y) o[y] += w * xrow[y];
      }
    }
  }
  x.values = std::move(out);
  x.renormalize();
}

void apply_right(const Kernel& q, LogVector& v) {
  Function out = act_right(q, Function(v.values));
  v.values = out.values();
  v.renormalize();
}

double log_pair(const Measure& mu, const LogVector& v) {
  require_same(mu.size(), v.size(), "log_pair");
  double acc = 0.0;
  for (std::size_t x = 0; x < mu.size(); ++x) acc += mu[x] * v.values[x];
  if (!(acc > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(acc) + v.log_scale;
}

// --- ProductWindow ----------------------------------------------------------

ProductWindow::ProductWindow(std::vector<Kernel> kernels, std::size_t first_index)
    : kernels_(std::move(kernels)), first_(first_index), p_(0) {
  if (kernels_.empty()) throw InvalidInput("ProductWindow needs at least one kernel");
  p_ = kernels_.front().size();
  for (const auto& k : kernels_) require_same(k.size(), p_, "ProductWindow");
}

const Kernel& ProductWindow::kernel(std::size_t i) const {
  if (i < first_ || i >= end()) throw DimensionError("window index out of range");
  return kernels_[i - first_];
}

void ProductWindow::check_range(std::size_t k, std::size_t n) const {
  if (k < first_ || n > end() || k > n) {
    throw DimensionError("window range [" + std::to_string(k) + "," + std::to_string(n) +
                         ") outside [" + std::to_string(first_) + "," +
                         std::to_string(end()) + ")");
  }
}

LogMatrix ProductWindow::product(std::size_t k, std::size_t n) const {
  check_range(k, n);
  LogMatrix m = LogMatrix::identity(p_);
  for (std::size_t i = k; i < n; ++i) right_multiply(m, kernel(i));
  return m;
}

LogVector ProductWindow::mass(std::size_t k, std::size_t n) const {
  check_range(k, n);
  LogVector v{std::vector<double>(p_, 1.0), 0.0};
  for (std::size_t i = n; i > k; --i) apply_right(kernel(i - 1), v);
  return v;
}

std::vector<LogVector> ProductWindow::masses_from(std::size_t k, std::size_t last) const {
  check_range(k, last);
  std::vector<LogVector> out;
  out.reserve(last - k + 1);
  const bool small_dense = p_ <= 64;
  if (small_dense) {
    // Carry the forward product M_{k,n} and read off its row sums.
    LogMatrix m = LogMatrix::identity(p_);
    for (std::size_t n = k;; ++n) {
      LogVector v{std::vector<double>(p_, 0.0), m.log_scale};
      for (std::size_t x = 0; x < p_; ++x) {
        double acc = 0.0;
        for (std::size_t y = 0; y < p_; ++y) acc += m.values[x * p_ + y];
        v.values[x] = acc;
      }
      v.renormalize();
      out.push_back(std::move(v));
      if (n == last) break;
      right_multiply(m, kernel(n));
    }
  } else {
    for (std::size_t n = k; n <= last; ++n) out.push_back(mass(k, n));
  }
  return out;
}

double ProductWindow::log_op_norm(std::size_t k, std::size_t n) const {
  return mass(k, n).log_sup();
}

ProjectiveStep ProductWindow::push(const Measure& mu, std::size_t k, std::size_t n) const {
  check_range(k, n);
  require_same(mu.size(), p_, "push");
  if (!mu.is_nonnegative()) throw InvalidInput("push: measure must be nonnegative");
  const double m0 = mu.mass();
  if (!(m0 > 0.0)) throw MassAnnihilated();
  Measure cur = mu.normalized();
  double log_norm = std::log(m0);
  for (std::size_t i = k; i < n; ++i) {
    auto step = projective_step(cur, kernel(i));
    cur = std::move(step.measure);
    log_norm += step.log_norm;
  }
  return {std::move(cur), log_norm};
}

}  // namespace kprod
