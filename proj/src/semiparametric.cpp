#include <algorithm>
#include <cmath>
#include <limits>

#include "sepp/errors.hpp"
#include "sepp/fit_em.hpp"
#include "sepp/optimize.hpp"

namespace sepp {

std::vector<double> adaptive_bandwidths(const EventCatalog& catalog,
                                        std::size_t np, double floor_radius,
                                        Exec exec) {
  if (np < 10 || np > 100)
    throw ValidationError("adaptive bandwidth neighbor count must be in [10, 100]");
  const std::size_t n = catalog.size();
  std::vector<double> radii(n, floor_radius);
  par_for(
      n,
      [&](std::size_t i) {
        std::vector<double> d2;
        d2.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          d2.push_back(
              squared_norm(catalog[i].location() - catalog[j].location()));
        }
        const std::size_t k = std::min(np, d2.size()) - 1;
        std::nth_element(d2.begin(), d2.begin() + k, d2.end());
        radii[i] = std::max(std::sqrt(d2[k]), floor_radius);
      },
      exec);
  return radii;
}

namespace {

// Evaluation grid for the background convergence check (cell centers).
std::vector<Vec2> background_grid(const ObservationDomain& domain,
                                  std::size_t grid) {
  const Rect box = domain.region.bounding_box();
  std::vector<Vec2> pts;
  pts.reserve(grid * grid);
  for (std::size_t iy = 0; iy < grid; ++iy) {
    for (std::size_t ix = 0; ix < grid; ++ix) {
      const Vec2 s{
          box.x0 + (static_cast<double>(ix) + 0.5) * box.width() /
                       static_cast<double>(grid),
          box.y0 + (static_cast<double>(iy) + 0.5) * box.height() /
                       static_cast<double>(grid)};
      if (domain.region.contains(s)) pts.push_back(s);
    }
  }
  return pts;
}

}  // namespace

SemiparametricResult semiparametric_fit(const IntensityModel& init,
                                        const EventCatalog& catalog,
                                        const ObservationDomain& domain,
                                        const SemiparametricOptions& options,
                                        Exec exec) {
  if (!init.triggering)
    throw ValidationError("semiparametric_fit requires a triggering family");
  if (catalog.size() < options.np)
    throw ValidationError("semiparametric_fit: catalog smaller than neighbor count");

  const double n = static_cast<double>(catalog.size());
  const double mean_rate = n / (domain_area(domain) * domain.t_end);
  const double tol =
      options.grid_tol > 0.0 ? options.grid_tol : 1e-3 * mean_rate;

  const std::vector<double> bandwidths =
      adaptive_bandwidths(catalog, options.np, options.bandwidth_floor, exec);
  std::vector<Vec2> points(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i)
    points[i] = catalog[i].location();

  const std::vector<Vec2> grid = background_grid(domain, options.grid);

  SemiparametricResult result;
  result.background = Background(
      ConstantBackground{options.data_scaled_init ? mean_rate : 1.0});

  IntensityModel model = init;
  EmOptions em = options.em;
  em.fit_background = false;  // background is rebuilt here, not in the M step

  std::vector<double> mu_values(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    mu_values[i] = result.background.eval(grid[i]);

  for (std::size_t outer = 0; outer < options.max_outer; ++outer) {
    result.outer_iterations = outer + 1;
    model.background = result.background;
    result.fit = em_fit(model, catalog, domain, em, exec);
    model = result.fit.model;

    KdeBackground kde;
    kde.points = points;
    kde.bandwidths = bandwidths;
    kde.weights = result.fit.branching.p_background;
    kde.time_norm = domain.t_end;
    Background updated{std::move(kde)};

    double max_delta = 0.0;
    std::vector<double> mu_new(grid.size());
    par_for(
        grid.size(),
        [&](std::size_t i) { mu_new[i] = updated.eval(grid[i]); },
        exec);
    for (std::size_t i = 0; i < grid.size(); ++i)
      max_delta = std::max(max_delta, std::abs(mu_new[i] - mu_values[i]));

    result.background = std::move(updated);
    mu_values = std::move(mu_new);

    if (max_delta <= tol) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged) {
    result.fit.notes.push_back(
        "semiparametric background iteration hit the outer cap");
  }
  return result;
}

// ----------------------------------------------------------------------
// FLP
// ----------------------------------------------------------------------

namespace {

double kde_at(const std::vector<Vec2>& pts, const std::vector<double>& w,
              double bandwidth, double time_span, std::size_t count, Vec2 s) {
  const double h2 = bandwidth * bandwidth;
  Accumulator acc;
  for (std::size_t i = 0; i < count; ++i) {
    acc.add(w[i] * std::exp(-squared_norm(s - pts[i]) / (2.0 * h2)));
  }
  return acc.value() / (2.0 * M_PI * h2 * std::max(time_span, 1e-12));
}

// Integral of the weighted KDE over the region (per unit time).
double kde_region_integral(const std::vector<Vec2>& pts,
                           const std::vector<double>& w, double bandwidth,
                           double time_span, std::size_t count,
                           const SpatialRegion& region) {
  Accumulator acc;
  if (region.is_rectangle()) {
    const Rect r = *region.as_rect();
    for (std::size_t i = 0; i < count; ++i) {
      acc.add(w[i] * normal_cdf_diff(r.x0, r.x1, pts[i].x, bandwidth) *
              normal_cdf_diff(r.y0, r.y1, pts[i].y, bandwidth));
    }
  } else {
    // Full-plane mass; adequate for interior kernels.
    for (std::size_t i = 0; i < count; ++i) acc.add(w[i]);
  }
  return acc.value() / std::max(time_span, 1e-12);
}

}  // namespace

std::vector<double> flp_increments(const std::optional<Triggering>& triggering,
                                   const std::vector<double>& weights,
                                   double bandwidth, const EventCatalog& catalog,
                                   const ObservationDomain& domain, Exec exec) {
  const std::size_t n = catalog.size();
  if (n < 4) throw ValidationError("flp needs at least 4 events");
  if (weights.size() != n)
    throw ValidationError("flp weight vector length mismatch");
  const std::size_t k1 = n / 2;

  std::vector<Vec2> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = catalog[i].location();

  std::vector<double> deltas(n - k1);
  par_for(
      n - k1,
      [&](std::size_t idx) {
        const std::size_t target = k1 + idx;  // predict event `target`
        const std::size_t hist = target;      // history = first `hist` events
        const Event& e = catalog[target];
        const double t_prev = catalog[target - 1].t;
        const double span = std::max(t_prev, 1e-12);

        double lambda = kde_at(pts, weights, bandwidth, span, hist, e.location());
        Accumulator trig_acc;
        if (triggering) {
          for (std::size_t j = 0; j < hist; ++j) {
            const Event& p = catalog[j];
            trig_acc.add(triggering->eval(e.location() - p.location(),
                                          e.t - p.t, p.mark));
          }
        }
        lambda += trig_acc.value();

        double integral = kde_region_integral(pts, weights, bandwidth, span,
                                              hist, domain.region) *
                          (e.t - t_prev);
        if (triggering) {
          Accumulator mass_acc;
          for (std::size_t j = 0; j < hist; ++j) {
            const Event& p = catalog[j];
            mass_acc.add(triggering->temporal_mass(e.t - p.t, p.mark) -
                         triggering->temporal_mass(t_prev - p.t, p.mark));
          }
          integral += mass_acc.value();
        }
        deltas[idx] = std::log(std::max(lambda, 1e-300)) - integral;
      },
      exec);
  return deltas;
}

FlpResult flp_fit(const IntensityModel& init, const EventCatalog& catalog,
                  const ObservationDomain& domain, const FlpOptions& options,
                  Exec exec) {
  if (!init.triggering)
    throw ValidationError("flp_fit requires a triggering family");
  const std::size_t n = catalog.size();
  if (n < 4) throw ValidationError("flp needs at least 4 events");

  // Silverman's rule as the default starting bandwidth.
  double bandwidth = options.bandwidth_init;
  if (bandwidth <= 0.0) {
    double mx = 0.0, my = 0.0;
    for (const Event& e : catalog) {
      mx += e.x;
      my += e.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double vx = 0.0, vy = 0.0;
    for (const Event& e : catalog) {
      vx += (e.x - mx) * (e.x - mx);
      vy += (e.y - my) * (e.y - my);
    }
    const double sd = std::sqrt(0.5 * (vx + vy) / static_cast<double>(n));
    bandwidth = std::max(sd * std::pow(static_cast<double>(n), -1.0 / 6.0),
                         options.bandwidth_floor);
  }

  std::vector<Vec2> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = catalog[i].location();
  std::vector<double> weights(n, 1.0);

  const Rect box = domain.region.bounding_box();
  const double diameter = std::hypot(box.width(), box.height());

  FlpResult result;
  IntensityModel model = init;
  EmOptions em = options.em;
  em.fit_background = false;

  std::vector<double> params_prev;
  for (std::size_t outer = 0; outer < options.max_outer; ++outer) {
    result.outer_iterations = outer + 1;

    KdeBackground kde;
    kde.points = pts;
    kde.weights = weights;
    kde.bandwidths.assign(n, bandwidth);
    kde.time_norm = domain.t_end;
    model.background = Background(kde);

    result.fit = em_fit(model, catalog, domain, em, exec);
    model = result.fit.model;

    // Select the bandwidth by the forward predictive score.
    auto score = [&](double log_h) {
      const std::vector<double> inc = flp_increments(
          model.triggering, weights, std::exp(log_h), catalog, domain, exec);
      Accumulator acc;
      for (double d : inc) acc.add(d);
      return acc.value();
    };
    const double new_bandwidth = std::exp(golden_section_max(
        score, std::log(options.bandwidth_floor), std::log(diameter), 35));

    weights = result.fit.branching.p_background;

    const std::vector<double> params = model_parameters(model);
    double dparam = 0.0;
    if (!params_prev.empty()) {
      for (std::size_t k = 0; k < params.size(); ++k) {
        dparam = std::max(dparam, std::abs(params[k] - params_prev[k]) /
                                      std::max(1.0, std::abs(params[k])));
      }
    }
    const double dh = std::abs(new_bandwidth - bandwidth) / bandwidth;
    bandwidth = new_bandwidth;
    params_prev = params;

    if (outer > 0 && dh < options.tol && dparam < options.tol) {
      result.converged = true;
      break;
    }
  }

  KdeBackground kde;
  kde.points = pts;
  kde.weights = weights;
  kde.bandwidths.assign(n, bandwidth);
  kde.time_norm = domain.t_end;
  result.background = Background(kde);
  result.bandwidth = bandwidth;
  result.increments =
      flp_increments(model.triggering, weights, bandwidth, catalog, domain, exec);
  if (!result.converged) {
    result.fit.notes.push_back("flp outer iteration hit the cap");
  }
  return result;
}

}  // namespace sepp
