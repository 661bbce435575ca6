#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sepp {

// Execution policy for the data-parallel kernels. Every kernel has a serial
// reference path; the parallel path must produce bit-identical results for
// any thread count, which the block-structured reductions below guarantee.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Neumaier-compensated accumulator.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

namespace detail {

inline constexpr std::size_t kBlock = 1024;

// Sequential pairwise tree reduction in fixed order.
inline double tree_reduce(std::vector<double>& parts) {
  std::size_t n = parts.size();
  if (n == 0) return 0.0;
  while (n > 1) {
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i + half < n; ++i) parts[i] += parts[i + half];
    n = half;
  }
  return parts[0];
}

}  // namespace detail

// Parallel for over [0, n); f(i) must only write state owned by index i.
template <class F>
void par_for(std::size_t n, F&& f, Exec exec = Exec::parallel) {
#ifdef _OPENMP
  if (exec == Exec::parallel && n > 1) {
    #pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      f(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)exec;
#endif
  for (std::size_t i = 0; i < n; ++i) f(i);
}

// Deterministic sum of f(i) over [0, n). Terms are grouped into fixed-size
// blocks; blocks are compensated internally and combined pairwise in index
// order, so the result does not depend on the thread count.
template <class F>
double det_sum(std::size_t n, F&& f, Exec exec = Exec::parallel) {
  if (n == 0) return 0.0;
  const std::size_t nblocks = (n + detail::kBlock - 1) / detail::kBlock;
  std::vector<double> parts(nblocks);
  par_for(
      nblocks,
      [&](std::size_t b) {
        Accumulator acc;
        const std::size_t lo = b * detail::kBlock;
        const std::size_t hi = std::min(n, lo + detail::kBlock);
        for (std::size_t i = lo; i < hi; ++i) acc.add(f(i));
        parts[b] = acc.value();
      },
      exec);
  return detail::tree_reduce(parts);
}

// Deterministic sum of k-dimensional contributions. f(i, acc) calls
// acc(j, x) for each component j it touches.
template <class F>
std::vector<double> det_sum_multi(std::size_t n, std::size_t k, F&& f,
                                  Exec exec = Exec::parallel) {
  std::vector<double> out(k, 0.0);
  if (n == 0 || k == 0) return out;
  const std::size_t nblocks = (n + detail::kBlock - 1) / detail::kBlock;
  std::vector<double> parts(nblocks * k);
  par_for(
      nblocks,
      [&](std::size_t b) {
        std::vector<Accumulator> acc(k);
        auto adder = [&](std::size_t j, double x) { acc[j].add(x); };
        const std::size_t lo = b * detail::kBlock;
        const std::size_t hi = std::min(n, lo + detail::kBlock);
        for (std::size_t i = lo; i < hi; ++i) f(i, adder);
        for (std::size_t j = 0; j < k; ++j) parts[b * k + j] = acc[j].value();
      },
      exec);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> column(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) column[b] = parts[b * k + j];
    out[j] = detail::tree_reduce(column);
  }
  return out;
}

}  // namespace sepp
