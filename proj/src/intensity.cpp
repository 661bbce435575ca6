#include "sepp/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sepp/errors.hpp"

namespace sepp {

double eval_intensity(const IntensityModel& model, const EventCatalog& catalog,
                      Vec2 s, double t, const HistoryOptions& history) {
  double lambda = model.background.eval(s);
  if (!model.triggering) return lambda;
  const Triggering& trig = *model.triggering;

  // Events with t_i < t contribute; events at exactly t do not.
  const std::size_t end = catalog.lower_bound_time(t);
  std::size_t begin = 0;
  if (history.time_cutoff) {
    begin = catalog.lower_bound_time(t - *history.time_cutoff);
  }
  Accumulator acc;
  for (std::size_t i = begin; i < end; ++i) {
    const Event& e = catalog[i];
    if (e.t >= t) continue;
    acc.add(trig.eval(s - e.location(), t - e.t, e.mark));
  }
  return lambda + acc.value();
}

double time_integrated_intensity(const IntensityModel& model,
                                 const EventCatalog& catalog, Vec2 s, double t0,
                                 double t1) {
  if (t1 <= t0) return 0.0;
  const double background = model.background.eval(s) * (t1 - t0);
  if (!model.triggering) return background;
  const Triggering& trig = *model.triggering;

  Accumulator acc;
  const std::size_t end = catalog.lower_bound_time(t1);
  for (std::size_t i = 0; i < end; ++i) {
    const Event& e = catalog[i];
    const Vec2 ds = s - e.location();

    if (const auto* g = trig.as<GaussianExponential>()) {
      const double spatial = std::exp(-squared_norm(ds) / (2.0 * g->sigma2)) /
                             (2.0 * M_PI * g->sigma2);
      const double lo = std::max(t0 - e.t, 0.0);
      const double hi = t1 - e.t;
      acc.add(g->theta * spatial *
              (std::exp(-lo / g->omega) - std::exp(-hi / g->omega)));
    } else if (const auto* f = trig.as<EtasPowerLaw>()) {
      const double m = e.mark.value_or(f->m0);
      const double kappa = f->k0 * std::exp(f->alpha * (m - f->m0));
      const double spatial = (f->q - 1.0) / (M_PI * f->d) *
                             std::pow(1.0 + squared_norm(ds) / f->d, -f->q);
      const double lo = std::max(t0 - e.t, 0.0);
      const double hi = t1 - e.t;
      acc.add(kappa * spatial *
              (std::pow(lo + f->c, 1.0 - f->p) - std::pow(hi + f->c, 1.0 - f->p)) /
              (f->p - 1.0));
    } else {
      const auto& h = *trig.as<HistogramTriggering>();
      const double r = std::sqrt(squared_norm(ds));
      // Radius bin is fixed; accumulate the overlapped time bins.
      std::size_t ri = h.radius_bins();
      if (r >= h.radius_edges.front() && r < h.radius_edges.back()) {
        const auto it = std::upper_bound(h.radius_edges.begin(),
                                         h.radius_edges.end(), r);
        ri = static_cast<std::size_t>(it - h.radius_edges.begin()) - 1;
      }
      if (ri >= h.radius_bins()) continue;
      const double lo = std::max(t0 - e.t, 0.0);
      const double hi = t1 - e.t;
      for (std::size_t ti = 0; ti < h.time_bins(); ++ti) {
        const double a = std::max(lo, h.time_edges[ti]);
        const double b = std::min(hi, h.time_edges[ti + 1]);
        if (b > a) acc.add(h.values[ti * h.radius_bins() + ri] * (b - a));
      }
    }
  }
  return background + acc.value();
}

namespace {

double schoenberg_integral(const IntensityModel& model,
                           const EventCatalog& catalog,
                           const ObservationDomain& domain,
                           const IntegralOptions& options, Exec exec) {
  double total =
      model.background.integral_over_region(domain.region) * domain.t_end;
  if (!model.triggering) return total;
  const Triggering& trig = *model.triggering;
  total += det_sum(
      catalog.size(),
      [&](std::size_t i) {
        const Event& e = catalog[i];
        return options.truncate_time
                   ? trig.temporal_mass(domain.t_end - e.t, e.mark)
                   : trig.mass(e.mark);
      },
      exec);
  return total;
}

double cubature_pass(const IntensityModel& model, const EventCatalog& catalog,
                     const ObservationDomain& domain, std::size_t nx,
                     std::size_t ny, Exec exec) {
  const Rect box = domain.region.bounding_box();
  const double dx = box.width() / static_cast<double>(nx);
  const double dy = box.height() / static_cast<double>(ny);
  const bool is_rect = domain.region.is_rectangle();
  const double cell = dx * dy;
  return det_sum(
      nx * ny,
      [&](std::size_t idx) {
        const std::size_t ix = idx % nx;
        const std::size_t iy = idx / nx;
        const Vec2 s{box.x0 + (static_cast<double>(ix) + 0.5) * dx,
                     box.y0 + (static_cast<double>(iy) + 0.5) * dy};
        if (!is_rect && !domain.region.contains(s)) return 0.0;
        return time_integrated_intensity(model, catalog, s, 0.0, domain.t_end) *
               cell;
      },
      exec);
}

}  // namespace

double integrated_intensity(const IntensityModel& model,
                            const EventCatalog& catalog,
                            const ObservationDomain& domain,
                            IntegralMethod method,
                            const IntegralOptions& options, Exec exec) {
  if (method == IntegralMethod::schoenberg) {
    return schoenberg_integral(model, catalog, domain, options, exec);
  }
  const double fine =
      cubature_pass(model, catalog, domain, options.nx, options.ny, exec);
  if (options.tolerance) {
    const double coarse = cubature_pass(model, catalog, domain,
                                        std::max<std::size_t>(options.nx / 2, 2),
                                        std::max<std::size_t>(options.ny / 2, 2),
                                        exec);
    const double err = std::abs(fine - coarse);
    if (err > *options.tolerance) {
      throw NumericalError(
          "cubature resolution " + std::to_string(options.nx) + "x" +
          std::to_string(options.ny) + " insufficient: error estimate " +
          std::to_string(err) + " exceeds tolerance " +
          std::to_string(*options.tolerance));
    }
  }
  return fine;
}

IntensityExtrema intensity_extrema(const IntensityModel& model,
                                   const EventCatalog& catalog,
                                   const ObservationDomain& domain,
                                   const ExtremaResolution& res, Exec exec) {
  const Rect box = domain.region.bounding_box();
  const bool is_rect = domain.region.is_rectangle();
  const std::size_t nx = std::max<std::size_t>(res.nx, 2);
  const std::size_t ny = std::max<std::size_t>(res.ny, 2);
  const std::size_t nt = std::max<std::size_t>(res.nt, 2);

  struct Cell {
    double value;
    double x, y, t;
  };
  std::vector<Cell> best_lo(nx * ny), best_hi(nx * ny);

  auto scan = [&](double x0, double x1, double y0, double y1, double t0,
                  double t1, std::size_t mx, std::size_t my, std::size_t mt,
                  Cell& lo_out, Cell& hi_out) {
    const double dx = (x1 - x0) / static_cast<double>(mx);
    const double dy = (y1 - y0) / static_cast<double>(my);
    const double dt = (t1 - t0) / static_cast<double>(mt);
    Cell lo{std::numeric_limits<double>::infinity(), 0, 0, 0};
    Cell hi{-std::numeric_limits<double>::infinity(), 0, 0, 0};
    for (std::size_t iy = 0; iy < my; ++iy) {
      for (std::size_t ix = 0; ix < mx; ++ix) {
        const Vec2 s{x0 + (static_cast<double>(ix) + 0.5) * dx,
                     y0 + (static_cast<double>(iy) + 0.5) * dy};
        if (!is_rect && !domain.region.contains(s)) continue;
        for (std::size_t it = 0; it < mt; ++it) {
          const double t = t0 + (static_cast<double>(it) + 0.5) * dt;
          const double v = eval_intensity(model, catalog, s, t);
          if (v < lo.value) lo = {v, s.x, s.y, t};
          if (v > hi.value) hi = {v, s.x, s.y, t};
        }
      }
    }
    lo_out = lo;
    hi_out = hi;
  };

  // Parallel over spatial columns; time loop inside.
  par_for(
      nx * ny,
      [&](std::size_t idx) {
        const std::size_t ix = idx % nx;
        const std::size_t iy = idx / nx;
        const double dx = box.width() / static_cast<double>(nx);
        const double dy = box.height() / static_cast<double>(ny);
        scan(box.x0 + dx * static_cast<double>(ix),
             box.x0 + dx * static_cast<double>(ix + 1),
             box.y0 + dy * static_cast<double>(iy),
             box.y0 + dy * static_cast<double>(iy + 1), 0.0, domain.t_end, 1, 1,
             nt, best_lo[idx], best_hi[idx]);
      },
      exec);

  Cell lo{std::numeric_limits<double>::infinity(), 0, 0, 0};
  Cell hi{-std::numeric_limits<double>::infinity(), 0, 0, 0};
  for (std::size_t i = 0; i < nx * ny; ++i) {
    if (best_lo[i].value < lo.value) lo = best_lo[i];
    if (best_hi[i].value > hi.value) hi = best_hi[i];
  }
  if (!std::isfinite(lo.value))
    throw NumericalError("intensity extrema: no grid point inside region");

  if (res.refine) {
    const double dx = box.width() / static_cast<double>(nx);
    const double dy = box.height() / static_cast<double>(ny);
    const double dt = domain.t_end / static_cast<double>(nt);
    Cell rl, rh, tmp;
    scan(std::max(box.x0, lo.x - dx), std::min(box.x1, lo.x + dx),
         std::max(box.y0, lo.y - dy), std::min(box.y1, lo.y + dy),
         std::max(0.0, lo.t - dt), std::min(domain.t_end, lo.t + dt), 5, 5, 5,
         rl, tmp);
    if (rl.value < lo.value) lo = rl;
    scan(std::max(box.x0, hi.x - dx), std::min(box.x1, hi.x + dx),
         std::max(box.y0, hi.y - dy), std::min(box.y1, hi.y + dy),
         std::max(0.0, hi.t - dt), std::min(domain.t_end, hi.t + dt), 5, 5, 5,
         tmp, rh);
    if (rh.value > hi.value) hi = rh;
  }
  return {lo.value, hi.value};
}

}  // namespace sepp
