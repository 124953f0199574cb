#pragma once

// Elementary symmetric functions, Newton transformations and Garding-cone
// tests on eigenvalue tuples.

#include <optional>
#include <span>
#include <vector>

namespace sigmaflow {

/// The n eigenvalues of a symmetric tensor at a point, n >= 1, all finite.
class EigenTuple {
 public:
  EigenTuple() = default;
  explicit EigenTuple(std::vector<double> values);

  int dim() const noexcept { return static_cast<int>(values_.size()); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<double> values_;
};

/// Eigenvalues of a rotationally symmetric tensor: one radial value and a
/// tangential value of multiplicity n-1.
struct RadialEigen {
  double rad = 0.0;
  double tan = 0.0;
  int n = 3;

  EigenTuple expand() const;
};

/// sigma_0..sigma_n and, for a chosen k, the diagonal of T_{k-1}.
struct SigmaProfile {
  std::vector<double> sigmas;
  std::vector<double> newton_diag;
  int k = 1;
};

double binomial(int n, int k);

/// sigma_0..sigma_n by compensated expansion of prod(x + lambda_i). Throws
/// InvalidInput on non-finite entries.
std::vector<double> sigma_all(const EigenTuple& lambda);

/// Coefficient expansion with error-free transformations (the returned path).
std::vector<double> sigma_expansion(std::span<const double> lambda);
/// Plain one-at-a-time recurrence sigma_j(L + x) = sigma_j(L) + x sigma_{j-1}(L).
std::vector<double> sigma_recurrence(std::span<const double> lambda);

/// sigma_j(|lambda|): the natural magnitude scale of sigma_j, used for
/// relative comparisons and cone margins.
std::vector<double> sigma_scale(std::span<const double> lambda);

SigmaProfile sigma_profile(const EigenTuple& lambda, int k);

/// sigma_j > cone_eps for all j = 1..k. cone_eps is absolute.
bool in_gamma_k_plus(const EigenTuple& lambda, int k, double cone_eps = 0.0);
bool in_gamma_k_plus(const RadialEigen& lambda, int k, double cone_eps = 0.0);

/// Entry i is sigma_{k-1}(lambda without lambda_i) = d sigma_k / d lambda_i.
std::vector<double> newton_diag(const EigenTuple& lambda, int k);

/// Entry k-1 is S_k^{1/k} with S_k = sigma_k / C(n,k); empty where sigma_k <= 0.
std::vector<std::optional<double>> maclaurin_means(const EigenTuple& lambda);

/// Gradient of log sigma_k. Throws ConeViolation outside Gamma_k^+.
std::vector<double> dlog_sigma_k(const EigenTuple& lambda, int k);

// Radial fast path, O(1) per call.
double sigma_k(const RadialEigen& lambda, int k);

/// sigma_k together with the Newton-transformation entries of a radial tuple:
/// t_rad for the radial slot and t_tan for each of the n-1 tangential slots.
struct RadialNewton {
  double sigma = 0.0;
  double t_rad = 0.0;
  double t_tan = 0.0;
};
RadialNewton radial_newton(const RadialEigen& lambda, int k);

/// min over j = 1..k of sigma_j / sigma_j(|lambda|), in [-1, 1]; positive iff
/// the tuple lies in Gamma_k^+.
double relative_cone_margin(const RadialEigen& lambda, int k);

}  // namespace sigmaflow
