#ifndef FLEXIDX_MONTECARLO_HPP
#define FLEXIDX_MONTECARLO_HPP

// Plain Monte Carlo estimates over theta ~ N(mean, V).
//
// Samples are drawn in chunks of 1024; chunk k always uses Rng(seed, k), so
// the counts do not depend on how many worker threads share the chunks.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "flexidx/errors.hpp"
#include "flexidx/flexindex.hpp"
#include "flexidx/model.hpp"
#include "flexidx/stats.hpp"

namespace flexidx {

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  long n_samples = 0;
  std::uint64_t seed = 0;
  double elapsed = 0.0; ///< seconds
};

inline constexpr long kMcChunk = 1024;

namespace detail {

inline McEstimate finish_estimate(long hits, long n, std::uint64_t seed,
                                  double elapsed) {
  McEstimate e;
  e.n_samples = n;
  e.seed = seed;
  e.elapsed = elapsed;
  e.estimate = static_cast<double>(hits) / static_cast<double>(n);
  e.std_error = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(n));
  e.ci95 = {std::clamp(e.estimate - 1.96 * e.std_error, 0.0, 1.0),
            std::clamp(e.estimate + 1.96 * e.std_error, 0.0, 1.0)};
  return e;
}

/// Counts samples theta for which hit(theta) holds.
template <typename Hit>
McEstimate count_gaussian_hits(const SystemModel &m, long n_samples,
                               std::uint64_t seed, unsigned threads, Hit hit) {
  if (n_samples < 1)
    throw DomainError("Monte Carlo needs at least one sample");
  const auto start = std::chrono::steady_clock::now();
  const auto chol = covariance_factor(m);
  const long n_chunks = (n_samples + kMcChunk - 1) / kMcChunk;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_chunks)));

  std::atomic<long> next{0};
  std::vector<long> hits(threads, 0);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&](unsigned w) {
    try {
      for (long k = next++; k < n_chunks; k = next++) {
        Rng rng(seed, static_cast<std::uint64_t>(k));
        const long count = std::min(kMcChunk, n_samples - k * kMcChunk);
        for (long i = 0; i < count; ++i)
          if (hit(sample_gaussian(m.uncertainty.mean, chol, rng)))
            ++hits[w];
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure)
        failure = std::current_exception();
      next = n_chunks;
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back(worker, w);
  }
  if (failure)
    std::rethrow_exception(failure);

  long total = 0;
  for (long h : hits)
    total += h;
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
  return finish_estimate(total, n_samples, seed, dt.count());
}

} // namespace detail

/// Fraction of Gaussian draws with psi(theta) <= 1e-9.
inline McEstimate estimate_sf(const SystemModel &m, long n_samples,
                              std::uint64_t seed, unsigned threads = 1) {
  return detail::count_gaussian_hits(m, n_samples, seed, threads,
                                     [&](const Vector &th) {
                                       return psi(m, th).u <= tol::feasible_psi;
                                     });
}

/// Fraction of Gaussian draws inside the ellipsoid of squared radius
/// delta_star.
inline McEstimate estimate_alpha(const SystemModel &m, double delta_star,
                                 long n_samples, std::uint64_t seed,
                                 unsigned threads = 1) {
  if (!(delta_star >= 0.0))
    throw DomainError("estimate_alpha: delta_star must be nonnegative");
  const auto chol = covariance_factor(m);
  return detail::count_gaussian_hits(
      m, n_samples, seed, threads, [&](const Vector &th) {
        return chol.inverse_quadratic(th - m.uncertainty.mean) <= delta_star;
      });
}

} // namespace flexidx

#endif // FLEXIDX_MONTECARLO_HPP
