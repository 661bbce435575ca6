#include "sepp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sepp/errors.hpp"

namespace sepp {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (Lentz), valid for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw ValidationError("gamma_p: invalid arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi_squared_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return 1.0 - gamma_p(0.5 * df, 0.5 * x);
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw ValidationError("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  while (ia < sa.size() && ib < sb.size()) {
    const double v = std::min(sa[ia], sb[ib]);
    while (ia < sa.size() && sa[ia] <= v) ++ia;
    while (ib < sb.size() && sb[ib] <= v) ++ib;
    d = std::max(d, std::abs(ia / na - ib / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_sf(en * d)};
}

KsResult ks_exponential(std::span<const double> sample, double rate) {
  if (sample.empty()) throw ValidationError("ks_exponential: empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double cdf = 1.0 - std::exp(-rate * s[i]);
    d = std::max(d, std::abs(cdf - i / n));
    d = std::max(d, std::abs((i + 1) / n - cdf));
  }
  return {d, kolmogorov_sf(std::sqrt(n) * d)};
}

double log_factorial(std::size_t n) {
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double binomial_tail_geq(std::size_t n, std::size_t k, double p) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  const double logp = std::log(p);
  const double logq = std::log1p(-p);
  double sum = 0.0;
  for (std::size_t j = k; j <= n; ++j) {
    const double logterm = log_factorial(n) - log_factorial(j) -
                           log_factorial(n - j) + j * logp + (n - j) * logq;
    sum += std::exp(logterm);
  }
  return std::min(1.0, sum);
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("empirical_quantile: empty");
  std::sort(values.begin(), values.end());
  const double np = p * static_cast<double>(values.size());
  std::size_t idx = static_cast<std::size_t>(std::ceil(np));
  if (idx > 0) --idx;
  if (idx >= values.size()) idx = values.size() - 1;
  return values[idx];
}

MatrixInverse invert_symmetric(std::span<const double> matrix, std::size_t dim) {
  MatrixInverse result;
  result.singular = false;
  // Gauss-Jordan with partial pivoting on an augmented copy.
  std::vector<double> a(matrix.begin(), matrix.end());
  std::vector<double> inv(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) inv[i * dim + i] = 1.0;

  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;

  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < dim; ++r) {
      if (std::abs(a[r * dim + col]) > std::abs(a[pivot * dim + col])) pivot = r;
    }
    if (std::abs(a[pivot * dim + col]) < 1e-13 * scale) {
      result.singular = true;
      break;
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < dim; ++c) {
        std::swap(a[pivot * dim + c], a[col * dim + c]);
        std::swap(inv[pivot * dim + c], inv[col * dim + c]);
      }
    }
    const double diag = a[col * dim + col];
    for (std::size_t c = 0; c < dim; ++c) {
      a[col * dim + c] /= diag;
      inv[col * dim + c] /= diag;
    }
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double factor = a[r * dim + col];
      if (factor == 0.0) continue;
      for (std::size_t c = 0; c < dim; ++c) {
        a[r * dim + c] -= factor * a[col * dim + c];
        inv[r * dim + c] -= factor * inv[col * dim + c];
      }
    }
  }

  if (result.singular) {
    // Report the eigenvector of the smallest eigenvalue as the null direction.
    std::vector<double> m(matrix.begin(), matrix.end());
    std::vector<double> v(dim, 1.0);
    // A few inverse-free power iterations on (scale*I - M) approximate the
    // smallest-eigenvalue direction well enough for an error message.
    for (int iter = 0; iter < 50; ++iter) {
      std::vector<double> w(dim, 0.0);
      for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c)
          w[r] += (((r == c) ? 2.0 * scale : 0.0) - m[r * dim + c]) * v[c];
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) break;
      for (std::size_t r = 0; r < dim; ++r) v[r] = w[r] / norm;
    }
    result.null_direction = v;
    return result;
  }

  // Symmetrize to clean up round-off.
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = r + 1; c < dim; ++c) {
      const double s = 0.5 * (inv[r * dim + c] + inv[c * dim + r]);
      inv[r * dim + c] = s;
      inv[c * dim + r] = s;
    }
  }
  result.inverse = std::move(inv);
  return result;
}

std::vector<double> symmetric_eigenvalues(std::span<const double> matrix,
                                          std::size_t dim) {
  std::vector<double> a(matrix.begin(), matrix.end());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = r + 1; c < dim; ++c) off += a[r * dim + c] * a[r * dim + c];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < dim; ++p) {
      for (std::size_t q = p + 1; q < dim; ++q) {
        const double apq = a[p * dim + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * dim + p];
        const double aqq = a[q * dim + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cos = 1.0 / std::sqrt(1.0 + t * t);
        const double sin = t * cos;
        for (std::size_t k = 0; k < dim; ++k) {
          const double akp = a[k * dim + p];
          const double akq = a[k * dim + q];
          a[k * dim + p] = cos * akp - sin * akq;
          a[k * dim + q] = sin * akp + cos * akq;
        }
        for (std::size_t k = 0; k < dim; ++k) {
          const double apk = a[p * dim + k];
          const double aqk = a[q * dim + k];
          a[p * dim + k] = cos * apk - sin * aqk;
          a[q * dim + k] = sin * apk + cos * aqk;
        }
      }
    }
  }
  std::vector<double> eig(dim);
  for (std::size_t i = 0; i < dim; ++i) eig[i] = a[i * dim + i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

double quadrat_chi_squared_pvalue(std::span<const double> counts) {
  if (counts.size() < 2)
    throw ValidationError("quadrat test needs at least two quadrats");
  double total = 0.0;
  for (double c : counts) total += c;
  const double expected = total / static_cast<double>(counts.size());
  if (expected <= 0.0) return 1.0;
  double stat = 0.0;
  for (double c : counts) {
    const double d = c - expected;
    stat += d * d / expected;
  }
  return chi_squared_sf(stat, static_cast<double>(counts.size() - 1));
}

}  // namespace sepp
