#include "sepp/fit_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sepp/errors.hpp"
#include "sepp/optimize.hpp"

namespace sepp {

namespace {

constexpr double kDropBelow = 1e-16;  // sparse branching entries below this

}  // namespace

double log_likelihood(const IntensityModel& model, const EventCatalog& catalog,
                      const ObservationDomain& domain,
                      const LoglikOptions& options, Exec exec) {
  const std::size_t n = catalog.size();
  std::vector<double> logs(n);
  std::vector<int> bad(n, 0);
  par_for(
      n,
      [&](std::size_t i) {
        const Event& e = catalog[i];
        if (options.interior && !options.interior->contains(e.location())) {
          logs[i] = 0.0;
          return;
        }
        const double lambda =
            eval_intensity(model, catalog, e.location(), e.t, options.history);
        if (!(lambda > 0.0)) {
          bad[i] = 1;
          logs[i] = 0.0;
          return;
        }
        logs[i] = std::log(lambda);
      },
      exec);
  for (std::size_t i = 0; i < n; ++i) {
    if (bad[i]) {
      throw NumericalError("zero conditional intensity at event index " +
                           std::to_string(i));
    }
  }
  const double sum_logs = det_sum(n, [&](std::size_t i) { return logs[i]; },
                                  Exec::serial);

  double integral;
  if (options.interior) {
    ObservationDomain inner;
    inner.region = SpatialRegion::rectangle(*options.interior);
    inner.t_end = domain.t_end;
    integral = integrated_intensity(model, catalog, inner, options.method,
                                    options.integral, exec);
  } else {
    integral = integrated_intensity(model, catalog, domain, options.method,
                                    options.integral, exec);
  }
  return sum_logs - integral;
}

std::vector<double> log_likelihood_gradient(const IntensityModel& model,
                                            const EventCatalog& catalog,
                                            const ObservationDomain& domain,
                                            const LoglikOptions& options,
                                            Exec exec) {
  const std::vector<double> params = model_parameters(model);
  std::vector<double> grad(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double step = std::max(1e-5 * std::abs(params[k]), 1e-7);
    std::vector<double> hi = params;
    std::vector<double> lo = params;
    hi[k] += step;
    lo[k] -= step;
    const double f_hi =
        log_likelihood(with_parameters(model, hi), catalog, domain, options, exec);
    const double f_lo =
        log_likelihood(with_parameters(model, lo), catalog, domain, options, exec);
    grad[k] = (f_hi - f_lo) / (2.0 * step);
  }
  return grad;
}

BranchingMatrix branching_probabilities(const IntensityModel& model,
                                        const EventCatalog& catalog,
                                        const HistoryOptions& history,
                                        Exec exec) {
  const std::size_t n = catalog.size();
  BranchingMatrix out;
  out.p_background.assign(n, 0.0);
  out.parents.assign(n, {});
  std::vector<int> bad(n, 0);

  par_for(
      n,
      [&](std::size_t i) {
        const Event& e = catalog[i];
        const double mu = model.background.eval(e.location());
        std::size_t begin = 0;
        if (history.time_cutoff) {
          begin = catalog.lower_bound_time(e.t - *history.time_cutoff);
        }
        std::vector<std::pair<std::uint32_t, double>> row;
        Accumulator lambda_acc;
        if (model.triggering) {
          for (std::size_t j = begin; j < i; ++j) {
            const Event& parent = catalog[j];
            if (parent.t >= e.t) continue;
            const double g = model.triggering->eval(
                e.location() - parent.location(), e.t - parent.t, parent.mark);
            if (g > 0.0) {
              row.emplace_back(static_cast<std::uint32_t>(j), g);
              lambda_acc.add(g);
            }
          }
        }
        const double lambda = mu + lambda_acc.value();
        if (!(lambda > 0.0)) {
          bad[i] = 1;
          return;
        }
        out.p_background[i] = mu / lambda;
        std::vector<std::pair<std::uint32_t, double>> kept;
        kept.reserve(row.size());
        for (auto& [j, g] : row) {
          const double p = g / lambda;
          if (p >= kDropBelow) kept.emplace_back(j, p);
        }
        kept.shrink_to_fit();
        out.parents[i] = std::move(kept);
      },
      exec);

  for (std::size_t i = 0; i < n; ++i) {
    if (bad[i]) {
      throw NumericalError("zero conditional intensity at event index " +
                           std::to_string(i));
    }
  }
  return out;
}

namespace {

struct PairStats {
  // Flattened significant pairs, ordered by child row.
  std::vector<double> w, dt, r2, parent_dm;
  double s0 = 0.0;       // total triggered weight over all stored pairs
  double sb = 0.0;       // total background weight
  double s_dt = 0.0;     // sum w * dt
  double s_r2 = 0.0;     // sum w * r^2
  double s_dm = 0.0;     // sum w * (parent mark - m0)
};

PairStats collect_pair_stats(const BranchingMatrix& b, const EventCatalog& catalog,
                             double m0, double keep_at_least, Exec exec) {
  const std::size_t n = b.size();
  const std::vector<double> sums = det_sum_multi(
      n, 5,
      [&](std::size_t i, auto add) {
        add(4, b.p_background[i]);
        const Event& child = catalog[i];
        for (const auto& [j, p] : b.parents[i]) {
          const Event& parent = catalog[j];
          add(0, p);
          add(1, p * (child.t - parent.t));
          add(2, p * squared_norm(child.location() - parent.location()));
          add(3, p * (parent.mark.value_or(m0) - m0));
        }
      },
      exec);

  PairStats stats;
  stats.s0 = sums[0];
  stats.s_dt = sums[1];
  stats.s_r2 = sums[2];
  stats.s_dm = sums[3];
  stats.sb = sums[4];

  std::vector<std::size_t> counts(n, 0);
  par_for(
      n,
      [&](std::size_t i) {
        std::size_t c = 0;
        for (const auto& [j, p] : b.parents[i]) {
          if (p >= keep_at_least) ++c;
        }
        counts[i] = c;
      },
      exec);
  std::size_t total = 0;
  std::vector<std::size_t> offsets(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i] = total;
    total += counts[i];
  }
  stats.w.resize(total);
  stats.dt.resize(total);
  stats.r2.resize(total);
  stats.parent_dm.resize(total);
  par_for(
      n,
      [&](std::size_t i) {
        std::size_t k = offsets[i];
        const Event& child = catalog[i];
        for (const auto& [j, p] : b.parents[i]) {
          if (p < keep_at_least) continue;
          const Event& parent = catalog[j];
          stats.w[k] = p;
          stats.dt[k] = child.t - parent.t;
          stats.r2[k] = squared_norm(child.location() - parent.location());
          stats.parent_dm[k] = parent.mark.value_or(m0) - m0;
          ++k;
        }
      },
      exec);
  return stats;
}

// Expected complete-data log-likelihood restricted to the triggering part,
// evaluated over all stored branching pairs (used as the generalized-EM
// acceptance guard for numeric M-steps).
double triggering_q(const IntensityModel& model, const BranchingMatrix& b,
                    const EventCatalog& catalog, const ObservationDomain& domain,
                    bool truncate_time, Exec exec) {
  const Triggering& trig = *model.triggering;
  const std::size_t n = b.size();
  const double pair_part = det_sum(
      n,
      [&](std::size_t i) {
        const Event& child = catalog[i];
        Accumulator acc;
        for (const auto& [j, p] : b.parents[i]) {
          const Event& parent = catalog[j];
          const double g = trig.eval(child.location() - parent.location(),
                                     child.t - parent.t, parent.mark);
          acc.add(p * std::log(std::max(g, 1e-300)));
        }
        return acc.value();
      },
      exec);
  const double mass_part = det_sum(
      n,
      [&](std::size_t i) {
        const Event& e = catalog[i];
        return truncate_time ? trig.temporal_mass(domain.t_end - e.t, e.mark)
                             : trig.mass(e.mark);
      },
      exec);
  return pair_part - mass_part;
}

void m_step_gaussian(IntensityModel& model, const PairStats& stats,
                     const EventCatalog& catalog, const ObservationDomain& domain,
                     bool truncate_time, std::vector<std::string>& notes) {
  const GaussianExponential cur = *model.triggering->as<GaussianExponential>();
  GaussianExponential next = cur;
  const std::size_t n = catalog.size();

  if (stats.s0 < 1e-12) {
    next.theta = 0.0;
    if (std::find(notes.begin(), notes.end(), "theta at zero boundary") ==
        notes.end())
      notes.push_back("theta at zero boundary");
    model.triggering = Triggering(next);
    return;
  }

  next.sigma2 = std::max(stats.s_r2 / (2.0 * stats.s0), 1e-12);

  if (!truncate_time) {
    next.omega = std::max(stats.s_dt / stats.s0, 1e-12);
    next.theta = stats.s0 / static_cast<double>(n);
  } else {
    // Profile likelihood in omega with theta maximized out analytically.
    auto denom = [&](double omega) {
      Accumulator acc;
      for (std::size_t i = 0; i < n; ++i) {
        acc.add(1.0 - std::exp(-(domain.t_end - catalog[i].t) / omega));
      }
      return std::max(acc.value(), 1e-12);
    };
    auto profile = [&](double log_omega) {
      const double omega = std::exp(log_omega);
      return -stats.s0 * std::log(denom(omega)) - stats.s0 * log_omega -
             stats.s_dt / omega;
    };
    const double center = std::log(std::max(stats.s_dt / stats.s0, 1e-12));
    const double log_omega =
        golden_section_max(profile, center - 3.0, center + 3.0, 50);
    next.omega = std::exp(log_omega);
    next.theta = stats.s0 / denom(next.omega);
  }
  model.triggering = Triggering(next);
}

void m_step_etas(IntensityModel& model, const PairStats& stats,
                 const BranchingMatrix& branching, const EventCatalog& catalog,
                 const ObservationDomain& domain, bool uses_marks,
                 bool truncate_time, Exec exec,
                 std::vector<std::string>& notes) {
  const EtasPowerLaw cur = *model.triggering->as<EtasPowerLaw>();
  EtasPowerLaw next = cur;
  const std::size_t n = catalog.size();
  const std::size_t npairs = stats.w.size();

  if (stats.s0 < 1e-12) {
    next.k0 = 1e-12;
    if (std::find(notes.begin(), notes.end(), "k0 at zero boundary") ==
        notes.end())
      notes.push_back("k0 at zero boundary");
    model.triggering = Triggering(next);
    return;
  }

  // Per-event productivity integral Sum_j e^{alpha dm_j} C_j(c, p) with
  // C_j the (optionally truncated) Omori mass at unit k0.
  auto integral_factor = [&](double alpha, double c, double p) {
    Accumulator acc;
    for (std::size_t j = 0; j < n; ++j) {
      const double dm = catalog[j].mark.value_or(cur.m0) - cur.m0;
      const double weight = uses_marks ? std::exp(alpha * dm) : 1.0;
      const double tau = domain.t_end - catalog[j].t;
      const double mass =
          truncate_time
              ? (std::pow(c, 1.0 - p) - std::pow(tau + c, 1.0 - p)) / (p - 1.0)
              : std::pow(c, 1.0 - p) / (p - 1.0);
      acc.add(weight * mass);
    }
    return acc.value();
  };

  // Temporal block: profile k0 out, optimize (c, p) by nested searches.
  auto s_log_dt = [&](double c) {
    return det_sum(
        npairs, [&](std::size_t k) { return stats.w[k] * std::log(stats.dt[k] + c); },
        exec);
  };
  auto temporal_profile = [&](double c, double p, double alpha) {
    const double e_factor = integral_factor(alpha, c, p);
    const double k0_hat = stats.s0 / std::max(e_factor, 1e-300);
    return stats.s0 * std::log(k0_hat) + alpha * stats.s_dm - p * s_log_dt(c);
  };
  auto temporal_profile_given_slog = [&](double c, double p, double alpha,
                                         double slog) {
    const double e_factor = integral_factor(alpha, c, p);
    const double k0_hat = stats.s0 / std::max(e_factor, 1e-300);
    return stats.s0 * std::log(k0_hat) + alpha * stats.s_dm - p * slog;
  };

  const double log_c = golden_section_max(
      [&](double lc) {
        const double c = std::exp(lc);
        const double slog = s_log_dt(c);
        const double lp = golden_section_max(
            [&](double logpm1) {
              return temporal_profile_given_slog(c, 1.0 + std::exp(logpm1),
                                                 next.alpha, slog);
            },
            std::log(1e-3), std::log(30.0), 25);
        return temporal_profile_given_slog(c, 1.0 + std::exp(lp), next.alpha,
                                           slog);
      },
      std::log(std::max(cur.c, 1e-8)) - 3.0, std::log(std::max(cur.c, 1e-8)) + 3.0,
      18);
  next.c = std::exp(log_c);
  {
    const double slog = s_log_dt(next.c);
    const double lp = golden_section_max(
        [&](double logpm1) {
          return temporal_profile_given_slog(next.c, 1.0 + std::exp(logpm1),
                                             next.alpha, slog);
        },
        std::log(1e-3), std::log(30.0), 40);
    next.p = 1.0 + std::exp(lp);
  }
  if (uses_marks) {
    next.alpha = golden_section_max(
        [&](double a) { return temporal_profile(next.c, next.p, a); }, 0.0, 5.0,
        40);
  }
  next.k0 = stats.s0 / std::max(integral_factor(next.alpha, next.c, next.p), 1e-300);

  // Spatial block: q has a closed form given d.
  auto s_log_r = [&](double d) {
    return det_sum(
        npairs,
        [&](std::size_t k) { return stats.w[k] * std::log1p(stats.r2[k] / d); },
        exec);
  };
  const double log_d = golden_section_max(
      [&](double ld) {
        const double d = std::exp(ld);
        const double sl = std::max(s_log_r(d), 1e-300);
        return stats.s0 * std::log(stats.s0 / sl) - stats.s0 * std::log(M_PI * d) -
               sl;
      },
      std::log(std::max(cur.d, 1e-10)) - 3.0, std::log(std::max(cur.d, 1e-10)) + 3.0,
      18);
  next.d = std::exp(log_d);
  next.q = 1.0 + stats.s0 / std::max(s_log_r(next.d), 1e-300);
  next.q = std::min(next.q, 50.0);

  // Generalized EM: accept the block update only if the full expected
  // complete-data objective does not decrease.
  IntensityModel candidate = model;
  candidate.triggering = Triggering(next);
  const double q_old =
      triggering_q(model, branching, catalog, domain, truncate_time, exec);
  const double q_new =
      triggering_q(candidate, branching, catalog, domain, truncate_time, exec);
  if (q_new >= q_old) {
    model.triggering = Triggering(next);
  } else if (std::find(notes.begin(), notes.end(),
                       "etas m-step rejected (kept previous parameters)") ==
             notes.end()) {
    notes.push_back("etas m-step rejected (kept previous parameters)");
  }
}

void m_step_histogram(IntensityModel& model, const BranchingMatrix& branching,
                      const EventCatalog& catalog, Exec exec) {
  const HistogramTriggering cur = *model.triggering->as<HistogramTriggering>();
  HistogramTriggering next = cur;
  const std::size_t nr = cur.radius_bins();
  const std::size_t nt = cur.time_bins();
  const std::size_t ncells = nt * nr;
  const std::size_t n = catalog.size();

  const std::vector<double> cell_weight = det_sum_multi(
      n, ncells,
      [&](std::size_t i, auto add) {
        const Event& child = catalog[i];
        for (const auto& [j, p] : branching.parents[i]) {
          const Event& parent = catalog[j];
          const double dt = child.t - parent.t;
          const double r =
              std::sqrt(squared_norm(child.location() - parent.location()));
          if (dt < cur.time_edges.front() || dt >= cur.time_edges.back()) continue;
          if (r < cur.radius_edges.front() || r >= cur.radius_edges.back())
            continue;
          const auto ti = static_cast<std::size_t>(
              std::upper_bound(cur.time_edges.begin(), cur.time_edges.end(), dt) -
              cur.time_edges.begin() - 1);
          const auto ri = static_cast<std::size_t>(
              std::upper_bound(cur.radius_edges.begin(), cur.radius_edges.end(),
                               r) -
              cur.radius_edges.begin() - 1);
          add(ti * nr + ri, p);
        }
      },
      exec);

  for (std::size_t ti = 0; ti < nt; ++ti) {
    for (std::size_t ri = 0; ri < nr; ++ri) {
      const double measure = cur.cell_measure(ti, ri);
      next.values[ti * nr + ri] =
          cell_weight[ti * nr + ri] / (static_cast<double>(n) * measure);
    }
  }
  model.triggering = Triggering(next);
}

}  // namespace

FitResult em_fit(const IntensityModel& init, const EventCatalog& catalog,
                 const ObservationDomain& domain, const EmOptions& options,
                 Exec exec) {
  if (catalog.empty()) throw ValidationError("em_fit: empty catalog");
  const double window_measure = domain_area(domain) * domain.t_end;

  FitResult result;
  result.model = init;
  double ll_prev = -std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    const BranchingMatrix branching = branching_probabilities(
        result.model, catalog, options.loglik.history, exec);
    const std::vector<double> params_old = model_parameters(result.model);

    // M step.
    const double m0 =
        result.model.triggering && result.model.triggering->as<EtasPowerLaw>()
            ? result.model.triggering->as<EtasPowerLaw>()->m0
            : 0.0;
    const PairStats stats = result.model.triggering
                                ? collect_pair_stats(branching, catalog, m0,
                                                     1e-12, exec)
                                : PairStats{};

    if (options.fit_background &&
        result.model.background.as<ConstantBackground>()) {
      const double sb = result.model.triggering
                            ? stats.sb
                            : static_cast<double>(catalog.size());
      result.model.background =
          Background(ConstantBackground{std::max(sb / window_measure, 0.0)});
    }
    if (result.model.triggering) {
      if (result.model.triggering->as<GaussianExponential>()) {
        m_step_gaussian(result.model, stats, catalog, domain,
                        options.loglik.integral.truncate_time, result.notes);
      } else if (result.model.triggering->as<EtasPowerLaw>()) {
        m_step_etas(result.model, stats, branching, catalog, domain,
                    result.model.uses_marks,
                    options.loglik.integral.truncate_time, exec, result.notes);
      } else {
        m_step_histogram(result.model, branching, catalog, exec);
      }
    }

    const double ll =
        log_likelihood(result.model, catalog, domain, options.loglik, exec);
    result.loglik_trace.push_back(ll);

    const std::vector<double> params_new = model_parameters(result.model);
    double dparam = 0.0;
    for (std::size_t k = 0; k < params_new.size(); ++k) {
      dparam = std::max(dparam, std::abs(params_new[k] - params_old[k]));
    }
    const bool ll_settled =
        iter > 0 && std::abs(ll - ll_prev) < options.loglik_tol;
    ll_prev = ll;
    if (ll_settled && dparam < options.param_tol) {
      result.converged = true;
      result.iterations = iter + 1;
      break;
    }
    result.iterations = iter + 1;
  }

  result.branching = branching_probabilities(result.model, catalog,
                                             options.loglik.history, exec);
  return result;
}

}  // namespace sepp
