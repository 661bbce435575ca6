#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sepp/fit_em.hpp"
#include "sepp/simulate.hpp"

namespace sepp {

struct CovarianceEstimate {
  std::size_t dim = 0;
  std::vector<double> sigma;  // row-major dim x dim
  std::vector<std::string> parameter_names;
  std::string gradient_method;  // "analytic" or "finite-difference(step=...)"

  double variance(std::size_t k) const { return sigma[k * dim + k]; }
};

struct CovarianceOptions {
  // Analytic intensity gradients are registered for the constant-rate
  // Poisson model (d lambda / d nu = 1); everything else uses central
  // differences with step max(rel_step * |theta_k|, abs_step).
  bool prefer_analytic = true;
  double rel_step = 1e-5;
  double abs_step = 1e-7;
};

// Rathbun-style estimator: inverse of sum_i grad_i grad_i^T / lambda_i^2.
CovarianceEstimate asymptotic_covariance(const IntensityModel& model,
                                         const EventCatalog& catalog,
                                         const CovarianceOptions& options = {},
                                         Exec exec = Exec::parallel);

// Wald interval theta_k +/- z * sqrt(Sigma_kk) at the given level.
std::pair<double, double> wald_interval(const CovarianceEstimate& cov,
                                        const std::vector<double>& theta_hat,
                                        std::size_t k, double level = 0.95);

struct BootstrapOptions {
  std::size_t replicates = 1000;  // B
  std::uint64_t seed = 0;
  SimConfig sim;       // seed is overridden per replicate
  EmOptions fit;
  // Optional adaptive stop: after each block, stop when both interval
  // endpoints move by less than adaptive_rel relative to the scale.
  bool adaptive = false;
  std::size_t block = 100;
  double adaptive_rel = 0.01;
  double max_failure_rate = 0.2;
};

struct BootstrapResult {
  std::vector<std::vector<double>> replicates;  // converged fits only
  std::vector<std::pair<double, double>> intervals;  // 2.5% / 97.5%
  std::vector<std::string> parameter_names;
  std::size_t requested = 0;
  std::size_t completed = 0;
  std::size_t failures = 0;
};

// Simulate-and-refit percentile bootstrap; deterministic given the master
// seed, with replicates running in parallel.
BootstrapResult parametric_bootstrap(const IntensityModel& fitted,
                                     const ObservationDomain& domain,
                                     const BootstrapOptions& options = {},
                                     Exec exec = Exec::parallel);

void save_bootstrap(const std::string& path, const BootstrapResult& result);

}  // namespace sepp
