#include "sigmaflow/symfun.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sigmaflow/error.hpp"

namespace sigmaflow {

namespace {

void check_finite(std::span<const double> lambda) {
  for (double x : lambda) {
    if (!std::isfinite(x)) throw InvalidInput("eigenvalue tuple has a non-finite entry");
  }
}

void check_k(int k, int n) {
  if (k < 1 || k > n) {
    throw InvalidInput("k = " + std::to_string(k) + " outside 1.." + std::to_string(n));
  }
}

// Error-free transformations (Knuth TwoSum, fma TwoProduct).
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}

inline void two_prod(double a, double b, double& p, double& e) {
  p = a * b;
  e = std::fma(a, b, -p);
}

inline double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

EigenTuple::EigenTuple(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidInput("eigenvalue tuple must be non-empty");
  check_finite(values_);
}

EigenTuple RadialEigen::expand() const {
  std::vector<double> v(static_cast<std::size_t>(n), tan);
  v[0] = rad;
  return EigenTuple(std::move(v));
}

double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

std::vector<double> sigma_expansion(std::span<const double> lambda) {
  const std::size_t n = lambda.size();
  std::vector<double> hi(n + 1, 0.0), lo(n + 1, 0.0);
  hi[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lambda[i];
    // Multiply the running polynomial by (X + x); descending j keeps it in place.
    for (std::size_t j = i + 1; j >= 1; --j) {
      double p, pe, s, se;
      two_prod(x, hi[j - 1], p, pe);
      two_sum(hi[j], p, s, se);
      hi[j] = s;
      lo[j] = lo[j] + x * lo[j - 1] + pe + se;
    }
  }
  for (std::size_t j = 0; j <= n; ++j) hi[j] += lo[j];
  return hi;
}

std::vector<double> sigma_recurrence(std::span<const double> lambda) {
  const std::size_t n = lambda.size();
  std::vector<double> prev(n + 1, 0.0), cur(n + 1, 0.0);
  prev[0] = 1.0;
  for (std::size_t m = 0; m < n; ++m) {
    cur[0] = 1.0;
    for (std::size_t j = 1; j <= m + 1; ++j) cur[j] = prev[j] + lambda[m] * prev[j - 1];
    std::swap(prev, cur);
  }
  return prev;
}

std::vector<double> sigma_scale(std::span<const double> lambda) {
  std::vector<double> a(lambda.begin(), lambda.end());
  for (double& x : a) x = std::abs(x);
  return sigma_recurrence(a);
}

std::vector<double> sigma_all(const EigenTuple& lambda) {
  check_finite(lambda.values());
  return sigma_expansion(lambda.values());
}

std::vector<double> newton_diag(const EigenTuple& lambda, int k) {
  const int n = lambda.dim();
  check_k(k, n);
  std::vector<double> out(static_cast<std::size_t>(n));
  std::vector<double> reduced;
  reduced.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    reduced.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) reduced.push_back(lambda[j]);
    }
    out[static_cast<std::size_t>(i)] = sigma_expansion(reduced)[static_cast<std::size_t>(k - 1)];
  }
  return out;
}

SigmaProfile sigma_profile(const EigenTuple& lambda, int k) {
  SigmaProfile p;
  p.sigmas = sigma_all(lambda);
  p.newton_diag = newton_diag(lambda, k);
  p.k = k;
  return p;
}

bool in_gamma_k_plus(const EigenTuple& lambda, int k, double cone_eps) {
  check_k(k, lambda.dim());
  const auto s = sigma_all(lambda);
  for (int j = 1; j <= k; ++j) {
    if (!(s[static_cast<std::size_t>(j)] > cone_eps)) return false;
  }
  return true;
}

std::vector<std::optional<double>> maclaurin_means(const EigenTuple& lambda) {
  const int n = lambda.dim();
  const auto s = sigma_all(lambda);
  std::vector<std::optional<double>> out(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double sk = s[static_cast<std::size_t>(k)];
    if (sk > 0.0) out[static_cast<std::size_t>(k - 1)] = std::pow(sk / binomial(n, k), 1.0 / k);
  }
  return out;
}

std::vector<double> dlog_sigma_k(const EigenTuple& lambda, int k) {
  check_k(k, lambda.dim());
  if (!in_gamma_k_plus(lambda, k)) throw ConeViolation("dlog_sigma_k: tuple outside Gamma_k^+");
  const double sk = sigma_all(lambda)[static_cast<std::size_t>(k)];
  auto t = newton_diag(lambda, k);
  for (double& x : t) x /= sk;
  return t;
}

double sigma_k(const RadialEigen& l, int k) {
  if (k == 0) return 1.0;
  const int m = l.n - 1;
  return binomial(m, k) * ipow(l.tan, k) + binomial(m, k - 1) * ipow(l.tan, k - 1) * l.rad;
}

bool in_gamma_k_plus(const RadialEigen& l, int k, double cone_eps) {
  check_k(k, l.n);
  if (!std::isfinite(l.rad) || !std::isfinite(l.tan)) return false;
  for (int j = 1; j <= k; ++j) {
    if (!(sigma_k(l, j) > cone_eps)) return false;
  }
  return true;
}

RadialNewton radial_newton(const RadialEigen& l, int k) {
  const int m = l.n - 1;
  RadialNewton r;
  r.sigma = sigma_k(l, k);
  r.t_rad = binomial(m, k - 1) * ipow(l.tan, k - 1);
  r.t_tan = binomial(m - 1, k - 1) * ipow(l.tan, k - 1) +
            (k >= 2 ? binomial(m - 1, k - 2) * ipow(l.tan, k - 2) * l.rad : 0.0);
  return r;
}

double relative_cone_margin(const RadialEigen& l, int k) {
  const RadialEigen a{std::abs(l.rad), std::abs(l.tan), l.n};
  double margin = 1.0;
  for (int j = 1; j <= k; ++j) {
    const double scale = sigma_k(a, j);
    const double s = sigma_k(l, j);
    margin = std::min(margin, scale > 0.0 ? s / scale : -1.0);
  }
  if (!std::isfinite(margin)) return -1.0;
  return margin;
}

}  // namespace sigmaflow
