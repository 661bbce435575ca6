#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sepp {

double normal_cdf(double z);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Survival function of the chi-squared distribution with df degrees of freedom.
double chi_squared_sf(double x, double df);

// Asymptotic Kolmogorov distribution: P(sqrt(n) * D > lambda).
double kolmogorov_sf(double lambda);

// Two-sample Kolmogorov-Smirnov test (asymptotic p-value, tie-aware ECDFs).
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// One-sample KS against the exponential CDF with the given rate.
KsResult ks_exponential(std::span<const double> sample, double rate);

// P(Binomial(n, p) >= k), exact.
double binomial_tail_geq(std::size_t n, std::size_t k, double p);

double log_factorial(std::size_t n);

// Empirical quantile (type 1): order statistic ceil(p*n). With n = 2,
// p = 0.025 gives the minimum and p = 0.975 the maximum.
double empirical_quantile(std::vector<double> sorted_or_not, double p);

// Dense symmetric matrix helpers for the small parameter-covariance systems.
// Matrices are row-major dim x dim.
struct MatrixInverse {
  std::vector<double> inverse;
  bool singular;
  std::vector<double> null_direction;  // filled when singular
};
MatrixInverse invert_symmetric(std::span<const double> matrix, std::size_t dim);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotation (ascending).
std::vector<double> symmetric_eigenvalues(std::span<const double> matrix,
                                          std::size_t dim);

// Quadrat-count chi-squared homogeneity test: partitions the unit counts
// vector (one entry per quadrat) against a common mean.
double quadrat_chi_squared_pvalue(std::span<const double> counts);

}  // namespace sepp
