#include "sepp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "sepp/errors.hpp"
#include "sepp/rng.hpp"
#include "sepp/voronoi.hpp"

namespace sepp {

namespace {

std::vector<double> event_intensities(const IntensityModel& model,
                                      const EventCatalog& catalog, Exec exec) {
  std::vector<double> lambdas(catalog.size());
  std::vector<int> bad(catalog.size(), 0);
  par_for(
      catalog.size(),
      [&](std::size_t i) {
        const Event& e = catalog[i];
        const double v = eval_intensity(model, catalog, e.location(), e.t);
        if (!(v > 0.0)) {
          bad[i] = 1;
          return;
        }
        lambdas[i] = v;
      },
      exec);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (bad[i])
      throw NumericalError("zero conditional intensity at event index " +
                           std::to_string(i));
  }
  return lambdas;
}

}  // namespace

ResidualProcess thin_residuals(const IntensityModel& model,
                               const EventCatalog& catalog,
                               const ObservationDomain& domain,
                               std::uint64_t seed, const ExtremaResolution& res,
                               Exec exec) {
  const IntensityExtrema extrema =
      intensity_extrema(model, catalog, domain, res, exec);
  const double b = extrema.inf_value;
  const std::vector<double> lambdas = event_intensities(model, catalog, exec);

  ResidualProcess out;
  out.kind = ResidualKind::thinned;
  out.target_rate = b;
  // Expected retained count ~ b * |X| * T; warn when that is tiny.
  out.uninformative = b * domain_area(domain) * domain.t_end < 10.0;

  const std::uint64_t base = derive_stream(seed, kStreamThinning);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const double p = std::min(b / lambdas[i], 1.0);
    Rng rng(derive_stream(base, i));
    if (rng.u01() < p) out.points.push_back({catalog[i], false});
  }
  return out;
}

ResidualProcess super_thin(const IntensityModel& model,
                           const EventCatalog& catalog,
                           const ObservationDomain& domain, double k,
                           std::uint64_t seed, const ExtremaResolution& res,
                           Exec exec) {
  const IntensityExtrema extrema =
      intensity_extrema(model, catalog, domain, res, exec);
  if (k < extrema.inf_value || k > extrema.sup_value) {
    throw ValidationError(
        "super-thinning rate k=" + std::to_string(k) + " outside [inf, sup] = [" +
        std::to_string(extrema.inf_value) + ", " +
        std::to_string(extrema.sup_value) + "]");
  }
  const std::vector<double> lambdas = event_intensities(model, catalog, exec);

  ResidualProcess out;
  out.kind = ResidualKind::superthinned;
  out.target_rate = k;

  const std::uint64_t base = derive_stream(seed, kStreamThinning);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const double p = std::min(k / lambdas[i], 1.0);
    Rng rng(derive_stream(base, i));
    if (rng.u01() < p) out.points.push_back({catalog[i], false});
  }

  // Superpose an inhomogeneous Poisson process with rate max(k - lambda, 0),
  // realized by thinning homogeneous candidates at rate k.
  Rng rng(derive_stream(seed, kStreamSuperpose));
  const Rect box = domain.region.bounding_box();
  const bool is_rect = domain.region.is_rectangle();
  const long candidates = rng.poisson(k * box.area() * domain.t_end);
  for (long c = 0; c < candidates; ++c) {
    Event e;
    e.t = rng.u01() * domain.t_end;
    e.x = box.x0 + rng.u01() * box.width();
    e.y = box.y0 + rng.u01() * box.height();
    const double u = rng.u01();
    if (!is_rect && !domain.region.contains(e.location())) continue;
    const double lambda = eval_intensity(model, catalog, e.location(), e.t);
    if (u * k < std::max(k - lambda, 0.0)) out.points.push_back({e, true});
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const ResidualPoint& a, const ResidualPoint& b2) {
              if (a.event.t != b2.event.t) return a.event.t < b2.event.t;
              if (a.event.x != b2.event.x) return a.event.x < b2.event.x;
              return a.event.y < b2.event.y;
            });
  return out;
}

KFunctionResult k_function(const std::vector<Vec2>& points,
                           const SpatialRegion& region,
                           std::vector<double> radii, std::size_t n_sims,
                           std::uint64_t seed, Exec exec) {
  if (points.size() < 2)
    throw ValidationError("k_function needs at least 2 points");
  if (radii.empty()) throw ValidationError("k_function: empty radius list");
  std::sort(radii.begin(), radii.end());

  const Rect box = region.bounding_box();
  const double diameter = std::hypot(box.width(), box.height());

  KFunctionResult out;
  out.radii = radii;
  out.radius_warning = radii.back() > diameter;

  const double area = region.area();
  auto khat_of = [&](const std::vector<Vec2>& pts) {
    const std::size_t n = pts.size();
    std::vector<double> counts(radii.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = std::sqrt(squared_norm(pts[i] - pts[j]));
        const auto it = std::lower_bound(radii.begin(), radii.end(), d);
        if (it != radii.end()) {
          counts[static_cast<std::size_t>(it - radii.begin())] += 2.0;
        }
      }
    }
    for (std::size_t r = 1; r < counts.size(); ++r) counts[r] += counts[r - 1];
    const double norm = area / (static_cast<double>(n) *
                                (static_cast<double>(n) - 1.0));
    for (double& c : counts) c *= norm;
    return counts;
  };

  out.khat = khat_of(points);

  // Pointwise envelope from homogeneous patterns with the same count.
  std::vector<std::vector<double>> sims(n_sims);
  const std::uint64_t base = derive_stream(seed, kStreamEnvelope);
  par_for(
      n_sims,
      [&](std::size_t s) {
        Rng rng(derive_stream(base, s));
        std::vector<Vec2> pts;
        pts.reserve(points.size());
        while (pts.size() < points.size()) {
          const Vec2 p{box.x0 + rng.u01() * box.width(),
                       box.y0 + rng.u01() * box.height()};
          if (region.contains(p)) pts.push_back(p);
        }
        sims[s] = khat_of(pts);
      },
      exec);

  out.env_lo.assign(radii.size(), std::numeric_limits<double>::infinity());
  out.env_hi.assign(radii.size(), -std::numeric_limits<double>::infinity());
  for (const auto& sim : sims) {
    for (std::size_t r = 0; r < radii.size(); ++r) {
      out.env_lo[r] = std::min(out.env_lo[r], sim[r]);
      out.env_hi[r] = std::max(out.env_hi[r], sim[r]);
    }
  }
  return out;
}

namespace {

// Centroid-rule quadrature of the time-integrated intensity over a convex
// polygon, by fanning into triangles and subdividing each barycentrically.
double polygon_intensity_integral(const IntensityModel& model,
                                  const EventCatalog& catalog, const Ring& cell,
                                  double t0, double t1, std::size_t level) {
  if (cell.size() < 3) return 0.0;
  Vec2 center{0.0, 0.0};
  for (const Vec2& v : cell) {
    center.x += v.x;
    center.y += v.y;
  }
  center.x /= static_cast<double>(cell.size());
  center.y /= static_cast<double>(cell.size());

  const double inv = 1.0 / static_cast<double>(level);
  Accumulator acc;
  for (std::size_t e = 0; e < cell.size(); ++e) {
    const Vec2 a = center;
    const Vec2 b = cell[e];
    const Vec2 c = cell[(e + 1) % cell.size()];
    const double tri_area = 0.5 * std::abs(cross(b - a, c - a));
    if (tri_area == 0.0) continue;
    const double sub_area = tri_area * inv * inv;
    // Barycentric subdivision: level^2 congruent subtriangles.
    for (std::size_t row = 0; row < level; ++row) {
      for (std::size_t colidx = 0; colidx < 2 * (level - row) - 1; ++colidx) {
        // Upright and inverted subtriangle centroids in barycentric coords.
        const bool inverted = (colidx % 2) == 1;
        const double col = static_cast<double>(colidx / 2);
        const double rowf = static_cast<double>(row);
        double u, v;
        if (!inverted) {
          u = (col + 1.0 / 3.0) * inv;
          v = (rowf + 1.0 / 3.0) * inv;
        } else {
          u = (col + 2.0 / 3.0) * inv;
          v = (rowf + 2.0 / 3.0) * inv;
        }
        // Map (u, v) over triangle (b, c) from apex a.
        const Vec2 p{a.x + u * (b.x - a.x) + v * (c.x - a.x),
                     a.y + u * (b.y - a.y) + v * (c.y - a.y)};
        acc.add(time_integrated_intensity(model, catalog, p, t0, t1) * sub_area);
      }
    }
  }
  return acc.value();
}

}  // namespace

VoronoiResidualMap voronoi_residuals(const IntensityModel& model,
                                     const EventCatalog& catalog,
                                     const ObservationDomain& domain,
                                     std::optional<double> t0_opt,
                                     std::optional<double> t1_opt, Exec exec) {
  if (catalog.size() < 3)
    throw ValidationError("voronoi_residuals needs at least 3 events");
  const double t0 = t0_opt.value_or(0.0);
  const double t1 = t1_opt.value_or(domain.t_end);
  if (t1 <= t0) throw ValidationError("voronoi_residuals: empty time window");

  std::vector<Vec2> sites(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i)
    sites[i] = catalog[i].location();
  const std::vector<Ring> cells = voronoi_cells(sites, domain.region, exec);

  VoronoiResidualMap map;
  map.t0 = t0;
  map.t1 = t1;
  map.cells.resize(cells.size());
  par_for(
      cells.size(),
      [&](std::size_t i) {
        VoronoiCellResidual& cell = map.cells[i];
        cell.polygon = cells[i];
        cell.area = std::abs(ring_signed_area(cells[i]));
        cell.integral =
            polygon_intensity_integral(model, catalog, cells[i], t0, t1, 12);
        cell.raw = 1.0 - cell.integral;
        cell.standardized =
            cell.integral > 0.0 ? cell.raw / std::sqrt(cell.integral) : 0.0;
      },
      exec);
  return map;
}

InformationCriteria information_criteria(double loglik, std::size_t n_params,
                                         std::size_t n_events) {
  if (!std::isfinite(loglik))
    throw ValidationError("information_criteria: non-finite log-likelihood");
  InformationCriteria out;
  const double k = static_cast<double>(n_params);
  const double n = static_cast<double>(n_events);
  out.aic = 2.0 * k - 2.0 * loglik;
  out.bic = k * std::log(n) - 2.0 * loglik;
  if (n_events >= 3) out.hq = 2.0 * k * std::log(std::log(n)) - 2.0 * loglik;
  return out;
}

void save_k_function(const std::string& path, const KFunctionResult& k) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write k-function file: " + path);
  out << "r,khat,env_lo,env_hi\n";
  char buf[160];
  for (std::size_t i = 0; i < k.radii.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", k.radii[i],
                  k.khat[i], k.env_lo[i], k.env_hi[i]);
    out << buf;
  }
}

void save_voronoi_residuals(const std::string& path,
                            const VoronoiResidualMap& map) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write voronoi file: " + path);
  out << "event_index,area,integral,raw,standardized\n";
  char buf[200];
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    const VoronoiCellResidual& c = map.cells[i];
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g,%.12g\n", i + 1,
                  c.area, c.integral, c.raw, c.standardized);
    out << buf;
  }
}

void save_residual_process(const std::string& path, const ResidualProcess& r) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write residual file: " + path);
  out << "t,x,y,origin\n";
  char buf[160];
  for (const ResidualPoint& p : r.points) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%s\n", p.event.t,
                  p.event.x, p.event.y, p.superposed ? "superposed" : "retained");
    out << buf;
  }
}

}  // namespace sepp
