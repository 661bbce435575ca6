#include "sepp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sepp/errors.hpp"
#include "sepp/stats.hpp"

namespace sepp {

CovarianceEstimate asymptotic_covariance(const IntensityModel& model,
                                         const EventCatalog& catalog,
                                         const CovarianceOptions& options,
                                         Exec exec) {
  const std::vector<double> params = model_parameters(model);
  const std::size_t dim = params.size();
  const std::size_t n = catalog.size();
  if (dim == 0) throw ValidationError("model has no free parameters");
  if (n == 0) throw ValidationError("empty catalog");

  CovarianceEstimate out;
  out.dim = dim;
  out.parameter_names = model_parameter_names(model);

  const bool analytic = options.prefer_analytic && !model.triggering &&
                        model.background.as<ConstantBackground>() != nullptr;
  if (analytic) {
    out.gradient_method = "analytic";
  } else {
    char buf[64];
    std::snprintf(buf, sizeof buf, "finite-difference(rel=%g,abs=%g)",
                  options.rel_step, options.abs_step);
    out.gradient_method = buf;
  }

  // Parameter-shifted models for central differences, built once.
  std::vector<IntensityModel> shifted_hi, shifted_lo;
  std::vector<double> steps(dim, 0.0);
  if (!analytic) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double step =
          std::max(options.rel_step * std::abs(params[k]), options.abs_step);
      steps[k] = step;
      std::vector<double> hi = params;
      std::vector<double> lo = params;
      hi[k] += step;
      lo[k] = std::max(lo[k] - step, 1e-300);
      shifted_hi.push_back(with_parameters(model, hi));
      shifted_lo.push_back(with_parameters(model, lo));
    }
  }

  // Per-event intensity and gradient, then the information-style sum
  // sum_i grad_i grad_i^T / lambda_i^2.
  std::vector<double> lambdas(n);
  std::vector<double> grads(n * dim);
  std::vector<int> bad(n, 0);
  par_for(
      n,
      [&](std::size_t i) {
        const Event& e = catalog[i];
        const double lambda = eval_intensity(model, catalog, e.location(), e.t);
        if (!(lambda > 0.0)) {
          bad[i] = 1;
          return;
        }
        lambdas[i] = lambda;
        for (std::size_t k = 0; k < dim; ++k) {
          if (analytic) {
            grads[i * dim + k] = 1.0;  // d lambda / d nu
          } else {
            const double hi =
                eval_intensity(shifted_hi[k], catalog, e.location(), e.t);
            const double lo =
                eval_intensity(shifted_lo[k], catalog, e.location(), e.t);
            const double width = params[k] + steps[k] -
                                 std::max(params[k] - steps[k], 1e-300);
            grads[i * dim + k] = (hi - lo) / width;
          }
        }
      },
      exec);
  for (std::size_t i = 0; i < n; ++i) {
    if (bad[i])
      throw NumericalError("zero conditional intensity at event index " +
                           std::to_string(i));
  }

  const std::size_t ncells = dim * dim;
  const std::vector<double> info = det_sum_multi(
      n, ncells,
      [&](std::size_t i, auto add) {
        const double inv2 = 1.0 / (lambdas[i] * lambdas[i]);
        for (std::size_t r = 0; r < dim; ++r)
          for (std::size_t c = 0; c < dim; ++c)
            add(r * dim + c, grads[i * dim + r] * grads[i * dim + c] * inv2);
      },
      Exec::serial);

  const MatrixInverse inv = invert_symmetric(info, dim);
  if (inv.singular) {
    std::ostringstream msg;
    msg << "singular information matrix; null direction approximately (";
    for (std::size_t k = 0; k < dim; ++k) {
      if (k) msg << ", ";
      msg << out.parameter_names[k] << "=" << inv.null_direction[k];
    }
    msg << ")";
    throw NumericalError(msg.str());
  }
  out.sigma = inv.inverse;
  return out;
}

std::pair<double, double> wald_interval(const CovarianceEstimate& cov,
                                        const std::vector<double>& theta_hat,
                                        std::size_t k, double level) {
  if (k >= cov.dim) throw ValidationError("wald_interval: index out of range");
  // Normal quantile via bisection on the CDF (levels are few; cost trivial).
  const double tail = 0.5 * (1.0 - level);
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(-mid) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double z = 0.5 * (lo + hi);
  const double half = z * std::sqrt(std::max(cov.variance(k), 0.0));
  return {theta_hat[k] - half, theta_hat[k] + half};
}

BootstrapResult parametric_bootstrap(const IntensityModel& fitted,
                                     const ObservationDomain& domain,
                                     const BootstrapOptions& options,
                                     Exec exec) {
  if (options.replicates < 2)
    throw ValidationError("bootstrap needs at least 2 replicates");
  const std::vector<double> theta = model_parameters(fitted);
  const std::size_t dim = theta.size();
  const double mass = expected_offspring_mass(fitted, options.sim.mark_law);
  if (mass >= 1.0)
    throw ValidationError("bootstrap requires a subcritical fitted model");

  BootstrapResult out;
  out.parameter_names = model_parameter_names(fitted);
  out.requested = options.replicates;

  const std::uint64_t base = derive_stream(options.seed, kStreamBootstrap);
  std::vector<std::vector<double>> rep(options.replicates);
  std::vector<int> ok(options.replicates, 0);

  auto run_block = [&](std::size_t lo, std::size_t hi) {
    par_for(
        hi - lo,
        [&](std::size_t off) {
          const std::size_t b = lo + off;
          SimConfig sim = options.sim;
          sim.seed = derive_stream(base, b);
          try {
            const SimResult data = simulate_cluster(fitted, domain, sim);
            if (data.catalog.empty()) return;
            // Refit the same model family starting from the fitted values.
            const FitResult fit =
                em_fit(fitted, data.catalog, domain, options.fit, Exec::serial);
            if (!fit.converged) return;
            rep[b] = model_parameters(fit.model);
            ok[b] = 1;
          } catch (const std::exception&) {
            // counted as a failure below
          }
        },
        exec);
  };

  auto intervals_from = [&](std::size_t upto) {
    std::vector<std::pair<double, double>> intervals(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      std::vector<double> column;
      column.reserve(upto);
      for (std::size_t b = 0; b < upto; ++b) {
        if (ok[b]) column.push_back(rep[b][k]);
      }
      if (column.empty()) {
        intervals[k] = {0.0, 0.0};
        continue;
      }
      // Sorted before quantiles: replicate execution order cannot matter.
      std::sort(column.begin(), column.end());
      intervals[k] = {empirical_quantile(column, 0.025),
                      empirical_quantile(column, 0.975)};
    }
    return intervals;
  };

  std::size_t completed = 0;
  std::vector<std::pair<double, double>> prev;
  while (completed < options.replicates) {
    const std::size_t hi =
        options.adaptive
            ? std::min(options.replicates, completed + options.block)
            : options.replicates;
    run_block(completed, hi);
    completed = hi;
    if (options.adaptive && completed < options.replicates) {
      const auto cur = intervals_from(completed);
      if (!prev.empty()) {
        double worst = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double scale =
              std::max(std::abs(cur[k].second - cur[k].first), 1e-12);
          worst = std::max(worst,
                           std::abs(cur[k].first - prev[k].first) / scale);
          worst = std::max(worst,
                           std::abs(cur[k].second - prev[k].second) / scale);
        }
        if (worst < options.adaptive_rel) {
          prev = cur;
          break;
        }
      }
      prev = cur;
    }
  }

  for (std::size_t b = 0; b < completed; ++b) {
    if (ok[b]) {
      out.replicates.push_back(rep[b]);
    } else {
      ++out.failures;
    }
  }
  out.completed = completed;
  if (static_cast<double>(out.failures) >
      options.max_failure_rate * static_cast<double>(completed)) {
    throw NumericalError(
        "parametric bootstrap: " + std::to_string(out.failures) + " of " +
        std::to_string(completed) +
        " replicates failed to converge; check the fitted model and padding");
  }
  out.intervals = intervals_from(completed);
  return out;
}

void save_bootstrap(const std::string& path, const BootstrapResult& result) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write bootstrap file: " + path);
  for (std::size_t k = 0; k < result.parameter_names.size(); ++k) {
    if (k) out << ',';
    out << result.parameter_names[k];
  }
  out << '\n';
  char buf[64];
  for (const auto& row : result.replicates) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out << ',';
      std::snprintf(buf, sizeof buf, "%.12g", row[k]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace sepp
