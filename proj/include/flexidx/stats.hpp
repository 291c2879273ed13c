#ifndef FLEXIDX_STATS_HPP
#define FLEXIDX_STATS_HPP

// Chi-squared distribution via the regularized lower incomplete gamma
// function, and a seeded Gaussian sampler.
//
// Rng wraps std::mt19937_64, whose output sequence for a given seed is fixed
// by the C++ standard, so streams agree across platforms and compilers.
// Substream (seed, stream) is seeded through std::seed_seq over the four
// 32-bit halves of the two keys. Normals come from the basic (non-polar)
// Box-Muller transform; uniforms use the top 53 bits of a draw.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

#include "flexidx/errors.hpp"
#include "flexidx/linalg.hpp"

namespace flexidx {

inline double ln_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError("ln_gamma: argument must be positive and finite");
  return boost::math::lgamma(x);
}

/// P(a, x) = gamma(a, x) / Gamma(a).
inline double reg_lower_incomplete_gamma(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw DomainError("reg_lower_incomplete_gamma: a must be positive");
  if (!(x >= 0.0))
    throw DomainError("reg_lower_incomplete_gamma: x must be nonnegative");
  if (x == 0.0)
    return 0.0;
  if (std::isinf(x))
    return 1.0;
  return boost::math::gamma_p(a, x);
}

/// CDF of the chi-squared distribution with k degrees of freedom.
inline double chi2_cdf(int k, double x) {
  if (k < 1)
    throw DomainError("chi2_cdf: degrees of freedom must be >= 1");
  if (!(x >= 0.0))
    throw DomainError("chi2_cdf: x must be nonnegative");
  return reg_lower_incomplete_gamma(0.5 * k, 0.5 * x);
}

/// x with chi2_cdf(k, x) = alpha.
///
/// Starts from Boost's inverse and finishes with bisection on a bracket
/// around it until the bracket is narrower than 1e-10.
inline double chi2_quantile(int k, double alpha) {
  if (k < 1)
    throw DomainError("chi2_quantile: degrees of freedom must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("chi2_quantile: alpha must lie in (0, 1)");
  const double guess = 2.0 * boost::math::gamma_p_inv(0.5 * k, alpha);

  double step = 1e-8 * (1.0 + guess);
  double lo = std::max(guess - step, 0.0), hi = guess + step;
  while (lo > 0.0 && chi2_cdf(k, lo) > alpha) {
    step *= 2.0;
    lo = std::max(guess - step, 0.0);
  }
  step = 1e-8 * (1.0 + guess);
  while (chi2_cdf(k, hi) < alpha) {
    step *= 2.0;
    hi = guess + step;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    if (chi2_cdf(k, mid) < alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; the second variate of each pair is kept.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Vector standard_normal(Eigen::Index n, Rng &rng) {
  Vector xi(n);
  for (Eigen::Index i = 0; i < n; ++i)
    xi(i) = rng.normal();
  return xi;
}

/// mean + L xi with xi ~ N(0, I).
inline Vector sample_gaussian(const Vector &mean, const CholeskyFactor &chol,
                              Rng &rng) {
  if (chol.dim() != mean.size())
    throw DimensionError("sample_gaussian: dimension mismatch");
  return mean + chol.L.triangularView<Eigen::Lower>() *
                    standard_normal(mean.size(), rng);
}

} // namespace flexidx

#endif // FLEXIDX_STATS_HPP
