#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sepp/catalog.hpp"
#include "sepp/intensity.hpp"
#include "sepp/models.hpp"
#include "sepp/parallel.hpp"

namespace sepp {

// Latent branching probabilities. Row i holds Pr(u_i = 0) and the sparse
// lower-triangular entries Pr(u_i = j) for t_j < t_i (entries below 1e-14
// are dropped; each row sums to 1 within 1e-10).
struct BranchingMatrix {
  std::vector<double> p_background;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> parents;

  std::size_t size() const { return p_background.size(); }
  double row_sum(std::size_t i) const {
    double s = p_background[i];
    for (const auto& [j, p] : parents[i]) s += p;
    return s;
  }
  // Sum of background probabilities: expected number of background events.
  double expected_background_count() const {
    Accumulator acc;
    for (double p : p_background) acc.add(p);
    return acc.value();
  }
};

struct LoglikOptions {
  IntegralMethod method = IntegralMethod::schoenberg;
  IntegralOptions integral;
  HistoryOptions history;
  // Interior-subdomain likelihood: sum and integral restricted to this
  // rectangle while the history still uses every event. Mitigates spatial
  // boundary bias at the cost of discarding boundary events.
  std::optional<Rect> interior;
};

// log L = sum_i log lambda(s_i, t_i) - integral of lambda over X x [0, T).
double log_likelihood(const IntensityModel& model, const EventCatalog& catalog,
                      const ObservationDomain& domain,
                      const LoglikOptions& options = {},
                      Exec exec = Exec::parallel);

// Central finite differences of log_likelihood in the free parameters.
std::vector<double> log_likelihood_gradient(const IntensityModel& model,
                                            const EventCatalog& catalog,
                                            const ObservationDomain& domain,
                                            const LoglikOptions& options = {},
                                            Exec exec = Exec::parallel);

BranchingMatrix branching_probabilities(const IntensityModel& model,
                                        const EventCatalog& catalog,
                                        const HistoryOptions& history = {},
                                        Exec exec = Exec::parallel);

struct EmOptions {
  double param_tol = 1e-6;
  double loglik_tol = 1e-6;
  std::size_t max_iter = 500;
  LoglikOptions loglik;
  bool fit_background = true;  // only meaningful for a constant background
};

struct FitResult {
  IntensityModel model;
  std::vector<double> loglik_trace;  // one entry per EM iteration
  std::size_t iterations = 0;
  bool converged = false;
  BranchingMatrix branching;
  std::vector<std::string> notes;  // boundary hits and other warnings
};

// Expectation-maximization over the latent branching structure. The trace
// records the (optionally approximated, per options.loglik) log-likelihood
// after each M-step and is non-decreasing up to floating-point slack.
FitResult em_fit(const IntensityModel& init, const EventCatalog& catalog,
                 const ObservationDomain& domain, const EmOptions& options = {},
                 Exec exec = Exec::parallel);

// ----------------------------------------------------------------------
// Semiparametric background iteration: alternate a parametric triggering
// fit with a weighted adaptive-bandwidth KDE background rebuilt from the
// current background probabilities.
// ----------------------------------------------------------------------

struct SemiparametricOptions {
  std::size_t np = 25;            // neighbor count for the adaptive bandwidth
  double bandwidth_floor = 1e-4;  // epsilon on the order of location error
  double grid_tol = -1.0;         // <= 0: data-scaled default
  std::size_t grid = 50;          // convergence checked on grid x grid points
  std::size_t max_outer = 30;
  bool data_scaled_init = false;  // mu = n/(|X| T) instead of mu = 1
  EmOptions em;
};

struct SemiparametricResult {
  FitResult fit;
  Background background{ConstantBackground{}};
  std::size_t outer_iterations = 0;
  bool converged = false;
};

SemiparametricResult semiparametric_fit(const IntensityModel& init,
                                        const EventCatalog& catalog,
                                        const ObservationDomain& domain,
                                        const SemiparametricOptions& options = {},
                                        Exec exec = Exec::parallel);

// Per-event adaptive bandwidths: radius of the smallest disk centered at
// each event containing at least np other events, floored.
std::vector<double> adaptive_bandwidths(const EventCatalog& catalog,
                                        std::size_t np, double floor_radius,
                                        Exec exec = Exec::parallel);

// ----------------------------------------------------------------------
// Forward likelihood-based predictive smoothing selection. The smoothing
// bandwidth is chosen by maximizing out-of-sample likelihood increments
// rather than the in-sample likelihood (which degenerates to zero
// bandwidth).
// ----------------------------------------------------------------------

struct FlpOptions {
  double bandwidth_init = 0.0;  // 0: Silverman's rule
  double bandwidth_floor = 1e-4;
  std::size_t max_outer = 15;
  double tol = 1e-3;
  EmOptions em;
};

struct FlpResult {
  FitResult fit;
  Background background{ConstantBackground{}};
  double bandwidth = 0.0;
  std::vector<double> increments;  // delta_{k,k+1} at the final estimate
  std::size_t outer_iterations = 0;
  bool converged = false;
};

FlpResult flp_fit(const IntensityModel& init, const EventCatalog& catalog,
                  const ObservationDomain& domain, const FlpOptions& options = {},
                  Exec exec = Exec::parallel);

// Forward increments delta_{k,k+1} for k = floor(n/2) .. n-1 (1-based),
// with the background a KDE over the first k events with the given weights
// and shared bandwidth, time-normalized by the elapsed history.
std::vector<double> flp_increments(const std::optional<Triggering>& triggering,
                                   const std::vector<double>& weights,
                                   double bandwidth, const EventCatalog& catalog,
                                   const ObservationDomain& domain,
                                   Exec exec = Exec::parallel);

}  // namespace sepp
