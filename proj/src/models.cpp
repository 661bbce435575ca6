#include "sepp/models.hpp"

#include <algorithm>
#include <cmath>

#include "sepp/errors.hpp"

namespace sepp {

namespace {

constexpr double kTwoPi = 6.283185307179586477;

void require(bool ok, const char* message) {
  if (!ok) throw ValidationError(message);
}

double etas_kappa(const EtasPowerLaw& f, std::optional<double> mark) {
  const double m = mark.value_or(f.m0);
  return f.k0 * std::exp(f.alpha * (m - f.m0));
}

std::size_t locate_bin(const std::vector<double>& edges, double v) {
  // Returns bin index for v in [edges[i], edges[i+1]); size() - 1 if outside.
  if (v < edges.front() || v >= edges.back()) return edges.size() - 1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

}  // namespace

double HistogramTriggering::cell_measure(std::size_t ti, std::size_t ri) const {
  const double dt = time_edges[ti + 1] - time_edges[ti];
  const double r0 = radius_edges[ri];
  const double r1 = radius_edges[ri + 1];
  const double annulus = M_PI * (r1 * r1 - r0 * r0);
  return dt * annulus;
}

Triggering::Triggering(Family family) : family_(std::move(family)) {
  if (const auto* g = std::get_if<GaussianExponential>(&family_)) {
    require(g->theta >= 0.0, "triggering weight theta must be >= 0");
    require(g->omega > 0.0, "temporal scale omega must be > 0");
    require(g->sigma2 > 0.0, "spatial variance sigma2 must be > 0");
  } else if (const auto* e = std::get_if<EtasPowerLaw>(&family_)) {
    require(e->k0 >= 0.0, "productivity k0 must be >= 0");
    require(e->c > 0.0, "temporal offset c must be > 0");
    require(e->p > 1.0, "temporal exponent p must be > 1 for finite mass");
    require(e->d > 0.0, "spatial scale d must be > 0");
    require(e->q > 1.0, "spatial exponent q must be > 1 for finite mass");
  } else if (const auto* h = std::get_if<HistogramTriggering>(&family_)) {
    require(h->time_edges.size() >= 2, "histogram needs >= 1 time bin");
    require(h->radius_edges.size() >= 2, "histogram needs >= 1 radius bin");
    require(h->time_edges.front() >= 0.0, "histogram time edges must be >= 0");
    require(h->radius_edges.front() >= 0.0, "histogram radius edges must be >= 0");
    for (std::size_t i = 1; i < h->time_edges.size(); ++i)
      require(h->time_edges[i] > h->time_edges[i - 1],
              "histogram time edges must be strictly increasing");
    for (std::size_t i = 1; i < h->radius_edges.size(); ++i)
      require(h->radius_edges[i] > h->radius_edges[i - 1],
              "histogram radius edges must be strictly increasing");
    require(h->values.size() == h->time_bins() * h->radius_bins(),
            "histogram cell count mismatch");
    for (double v : h->values)
      require(v >= 0.0, "histogram cell values must be >= 0");
  }
}

double Triggering::eval(Vec2 ds, double dt, std::optional<double> mark) const {
  if (dt <= 0.0) return 0.0;  // causality: g(u) = 0 for u <= 0
  if (const auto* g = std::get_if<GaussianExponential>(&family_)) {
    const double expo = -dt / g->omega - squared_norm(ds) / (2.0 * g->sigma2);
    return g->theta / (kTwoPi * g->omega * g->sigma2) * std::exp(expo);
  }
  if (const auto* e = std::get_if<EtasPowerLaw>(&family_)) {
    const double temporal = etas_kappa(*e, mark) * std::pow(dt + e->c, -e->p);
    const double spatial = (e->q - 1.0) / (M_PI * e->d) *
                           std::pow(1.0 + squared_norm(ds) / e->d, -e->q);
    return temporal * spatial;
  }
  const auto& h = std::get<HistogramTriggering>(family_);
  const std::size_t ti = locate_bin(h.time_edges, dt);
  if (ti >= h.time_bins()) return 0.0;
  const double r = std::sqrt(squared_norm(ds));
  const std::size_t ri = locate_bin(h.radius_edges, r);
  if (ri >= h.radius_bins()) return 0.0;
  return h.values[ti * h.radius_bins() + ri];
}

double Triggering::mass(std::optional<double> mark) const {
  if (const auto* g = std::get_if<GaussianExponential>(&family_)) return g->theta;
  if (const auto* e = std::get_if<EtasPowerLaw>(&family_)) {
    return etas_kappa(*e, mark) * std::pow(e->c, 1.0 - e->p) / (e->p - 1.0);
  }
  const auto& h = std::get<HistogramTriggering>(family_);
  double total = 0.0;
  for (std::size_t ti = 0; ti < h.time_bins(); ++ti)
    for (std::size_t ri = 0; ri < h.radius_bins(); ++ri)
      total += h.values[ti * h.radius_bins() + ri] * h.cell_measure(ti, ri);
  return total;
}

double Triggering::temporal_mass(double tau, std::optional<double> mark) const {
  if (tau <= 0.0) return 0.0;
  if (const auto* g = std::get_if<GaussianExponential>(&family_)) {
    return g->theta * (1.0 - std::exp(-tau / g->omega));
  }
  if (const auto* e = std::get_if<EtasPowerLaw>(&family_)) {
    const double kappa = etas_kappa(*e, mark);
    return kappa *
           (std::pow(e->c, 1.0 - e->p) - std::pow(tau + e->c, 1.0 - e->p)) /
           (e->p - 1.0);
  }
  const auto& h = std::get<HistogramTriggering>(family_);
  double total = 0.0;
  for (std::size_t ti = 0; ti < h.time_bins(); ++ti) {
    const double lo = h.time_edges[ti];
    const double hi = std::min(h.time_edges[ti + 1], tau);
    if (hi <= lo) break;
    for (std::size_t ri = 0; ri < h.radius_bins(); ++ri) {
      const double r0 = h.radius_edges[ri];
      const double r1 = h.radius_edges[ri + 1];
      total += h.values[ti * h.radius_bins() + ri] * (hi - lo) * M_PI *
               (r1 * r1 - r0 * r0);
    }
  }
  return total;
}

double Triggering::temporal_marginal(double dt, std::optional<double> mark) const {
  if (dt <= 0.0) return 0.0;
  if (const auto* g = std::get_if<GaussianExponential>(&family_)) {
    return g->theta / g->omega * std::exp(-dt / g->omega);
  }
  if (const auto* e = std::get_if<EtasPowerLaw>(&family_)) {
    return etas_kappa(*e, mark) * std::pow(dt + e->c, -e->p);
  }
  const auto& h = std::get<HistogramTriggering>(family_);
  const std::size_t ti = locate_bin(h.time_edges, dt);
  if (ti >= h.time_bins()) return 0.0;
  double total = 0.0;
  for (std::size_t ri = 0; ri < h.radius_bins(); ++ri) {
    const double r0 = h.radius_edges[ri];
    const double r1 = h.radius_edges[ri + 1];
    total += h.values[ti * h.radius_bins() + ri] * M_PI * (r1 * r1 - r0 * r0);
  }
  return total;
}

double Triggering::temporal_marginal_bound(double dt,
                                           std::optional<double> mark) const {
  if (std::holds_alternative<GaussianExponential>(family_) ||
      std::holds_alternative<EtasPowerLaw>(family_)) {
    // Monotone decreasing marginals: the bound is the value just after dt.
    return temporal_marginal(std::max(dt, 1e-300), mark);
  }
  const auto& h = std::get<HistogramTriggering>(family_);
  double best = 0.0;
  for (std::size_t ti = 0; ti < h.time_bins(); ++ti) {
    if (h.time_edges[ti + 1] <= dt) continue;
    double level = 0.0;
    for (std::size_t ri = 0; ri < h.radius_bins(); ++ri) {
      const double r0 = h.radius_edges[ri];
      const double r1 = h.radius_edges[ri + 1];
      level += h.values[ti * h.radius_bins() + ri] * M_PI * (r1 * r1 - r0 * r0);
    }
    best = std::max(best, level);
  }
  return best;
}

TriggeringOffset Triggering::sample_offset(Rng& rng,
                                           std::optional<double> mark) const {
  (void)mark;
  TriggeringOffset out;
  if (const auto* g = std::get_if<GaussianExponential>(&family_)) {
    out.dt = -g->omega * std::log(rng.u01());
    const double sd = std::sqrt(g->sigma2);
    out.ds = {sd * rng.normal(), sd * rng.normal()};
    return out;
  }
  if (const auto* e = std::get_if<EtasPowerLaw>(&family_)) {
    out.dt = e->c * (std::pow(rng.u01(), 1.0 / (1.0 - e->p)) - 1.0);
    const double r =
        std::sqrt(e->d * (std::pow(rng.u01(), 1.0 / (1.0 - e->q)) - 1.0));
    const double angle = kTwoPi * rng.u01();
    out.ds = {r * std::cos(angle), r * std::sin(angle)};
    return out;
  }
  const auto& h = std::get<HistogramTriggering>(family_);
  const double total = mass(std::nullopt);
  if (total <= 0.0) throw NumericalError("cannot sample from zero-mass histogram");
  double u = rng.u01() * total;
  std::size_t ti = 0;
  std::size_t ri = 0;
  for (std::size_t t = 0; t < h.time_bins() && u >= 0.0; ++t) {
    for (std::size_t r = 0; r < h.radius_bins(); ++r) {
      const double w = h.values[t * h.radius_bins() + r] * h.cell_measure(t, r);
      if (u < w) {
        ti = t;
        ri = r;
        goto found;
      }
      u -= w;
    }
  }
  ti = h.time_bins() - 1;
  ri = h.radius_bins() - 1;
found:
  out.dt = h.time_edges[ti] +
           rng.u01() * (h.time_edges[ti + 1] - h.time_edges[ti]);
  {
    const double r0 = h.radius_edges[ri];
    const double r1 = h.radius_edges[ri + 1];
    const double r = std::sqrt(r0 * r0 + rng.u01() * (r1 * r1 - r0 * r0));
    const double angle = kTwoPi * rng.u01();
    out.ds = {r * std::cos(angle), r * std::sin(angle)};
  }
  return out;
}

std::optional<double> Triggering::cutoff_for_tail_mass(double tail) const {
  if (const auto* g = std::get_if<GaussianExponential>(&family_)) {
    return -g->omega * std::log(tail);
  }
  if (const auto* h = std::get_if<HistogramTriggering>(&family_)) {
    return h->time_edges.back();
  }
  // Power-law tails decay too slowly for a useful cutoff.
  return std::nullopt;
}

double Triggering::temporal_scale() const {
  if (const auto* g = std::get_if<GaussianExponential>(&family_)) return g->omega;
  if (const auto* e = std::get_if<EtasPowerLaw>(&family_)) return 10.0 * e->c;
  return std::get<HistogramTriggering>(family_).time_edges.back();
}

double Triggering::spatial_scale() const {
  if (const auto* g = std::get_if<GaussianExponential>(&family_))
    return std::sqrt(g->sigma2);
  if (const auto* e = std::get_if<EtasPowerLaw>(&family_)) return std::sqrt(e->d);
  return std::get<HistogramTriggering>(family_).radius_edges.back();
}

double GridBackground::value_at(Vec2 s) const {
  if (!rect.contains(s)) return 0.0;
  const double fx = (s.x - rect.x0) / rect.width() * static_cast<double>(nx);
  const double fy = (s.y - rect.y0) / rect.height() * static_cast<double>(ny);
  std::size_t ix = std::min(static_cast<std::size_t>(fx), nx - 1);
  std::size_t iy = std::min(static_cast<std::size_t>(fy), ny - 1);
  return values[iy * nx + ix];
}

Background::Background(Model model) : model_(std::move(model)) {
  if (const auto* c = std::get_if<ConstantBackground>(&model_)) {
    require(c->nu >= 0.0, "background rate nu must be >= 0");
  } else if (const auto* k = std::get_if<KdeBackground>(&model_)) {
    require(k->weights.size() == k->points.size(),
            "kde background weight count mismatch");
    require(k->bandwidths.size() == k->points.size(),
            "kde background bandwidth count mismatch");
    require(k->time_norm > 0.0, "kde time normalization must be > 0");
    for (double w : k->weights) require(w >= 0.0, "kde weights must be >= 0");
    for (double h : k->bandwidths) require(h > 0.0, "kde bandwidths must be > 0");
  } else if (const auto* g = std::get_if<GridBackground>(&model_)) {
    require(g->nx >= 1 && g->ny >= 1, "grid background needs cells");
    require(g->rect.area() > 0.0, "grid background rect must have area");
    require(g->values.size() == g->nx * g->ny, "grid background size mismatch");
    for (double v : g->values) require(v >= 0.0, "grid values must be >= 0");
  }
}

double Background::eval(Vec2 s) const {
  if (const auto* c = std::get_if<ConstantBackground>(&model_)) return c->nu;
  if (const auto* k = std::get_if<KdeBackground>(&model_)) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k->points.size(); ++i) {
      const double h2 = k->bandwidths[i] * k->bandwidths[i];
      const double d2 = squared_norm(s - k->points[i]);
      sum += k->weights[i] / (kTwoPi * h2) * std::exp(-d2 / (2.0 * h2));
    }
    return sum / k->time_norm;
  }
  return std::get<GridBackground>(model_).value_at(s);
}

double Background::integral_over_rect(const Rect& rect) const {
  if (const auto* c = std::get_if<ConstantBackground>(&model_)) {
    return c->nu * rect.area();
  }
  if (const auto* k = std::get_if<KdeBackground>(&model_)) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k->points.size(); ++i) {
      const double h = k->bandwidths[i];
      const double px = normal_cdf_diff(rect.x0, rect.x1, k->points[i].x, h);
      const double py = normal_cdf_diff(rect.y0, rect.y1, k->points[i].y, h);
      sum += k->weights[i] * px * py;
    }
    return sum / k->time_norm;
  }
  const auto& g = std::get<GridBackground>(model_);
  // Sum of cell value times overlap area.
  const double cw = g.rect.width() / static_cast<double>(g.nx);
  const double ch = g.rect.height() / static_cast<double>(g.ny);
  double sum = 0.0;
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    const double cy0 = g.rect.y0 + ch * static_cast<double>(iy);
    const double oy = std::max(
        0.0, std::min(rect.y1, cy0 + ch) - std::max(rect.y0, cy0));
    if (oy == 0.0) continue;
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const double cx0 = g.rect.x0 + cw * static_cast<double>(ix);
      const double ox = std::max(
          0.0, std::min(rect.x1, cx0 + cw) - std::max(rect.x0, cx0));
      if (ox == 0.0) continue;
      sum += g.values[iy * g.nx + ix] * ox * oy;
    }
  }
  return sum;
}

double Background::integral_over_region(const SpatialRegion& region) const {
  if (region.is_rectangle()) return integral_over_rect(*region.as_rect());
  if (const auto* c = std::get_if<ConstantBackground>(&model_)) {
    return c->nu * region.area();
  }
  // Midpoint grid over the bounding box with an inside mask. 512x512 keeps
  // the relative error well below the tolerances used elsewhere.
  const Rect box = region.bounding_box();
  const std::size_t n = 512;
  const double dx = box.width() / static_cast<double>(n);
  const double dy = box.height() / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    const double y = box.y0 + (static_cast<double>(iy) + 0.5) * dy;
    for (std::size_t ix = 0; ix < n; ++ix) {
      const Vec2 s{box.x0 + (static_cast<double>(ix) + 0.5) * dx, y};
      if (region.contains(s)) sum += eval(s);
    }
  }
  return sum * dx * dy;
}

double Background::sup_bound(const Rect& rect) const {
  if (const auto* c = std::get_if<ConstantBackground>(&model_)) return c->nu;
  if (const auto* k = std::get_if<KdeBackground>(&model_)) {
    // Grid maximum plus a Lipschitz margin; the gradient magnitude of each
    // kernel is at most w / (2 pi h^3 T) * exp(-1/2).
    const std::size_t n = 128;
    const double dx = rect.width() / static_cast<double>(n);
    const double dy = rect.height() / static_cast<double>(n);
    double grid_max = 0.0;
    for (std::size_t iy = 0; iy <= n; ++iy) {
      for (std::size_t ix = 0; ix <= n; ++ix) {
        const Vec2 s{rect.x0 + dx * static_cast<double>(ix),
                     rect.y0 + dy * static_cast<double>(iy)};
        grid_max = std::max(grid_max, eval(s));
      }
    }
    double lipschitz = 0.0;
    for (std::size_t i = 0; i < k->points.size(); ++i) {
      const double h = k->bandwidths[i];
      lipschitz += k->weights[i] * std::exp(-0.5) / (kTwoPi * h * h * h);
    }
    lipschitz /= k->time_norm;
    return grid_max + lipschitz * 0.5 * std::sqrt(dx * dx + dy * dy);
  }
  const auto& g = std::get<GridBackground>(model_);
  double vmax = 0.0;
  for (double v : g.values) vmax = std::max(vmax, v);
  return vmax;
}

double normal_cdf_diff(double lo, double hi, double center, double sd) {
  const double inv = 1.0 / (sd * std::sqrt(2.0));
  return 0.5 * (std::erf((hi - center) * inv) - std::erf((lo - center) * inv));
}

std::vector<double> model_parameters(const IntensityModel& model) {
  std::vector<double> params;
  if (const auto* c = model.background.as<ConstantBackground>())
    params.push_back(c->nu);
  if (model.triggering) {
    if (const auto* g = model.triggering->as<GaussianExponential>()) {
      params.insert(params.end(), {g->theta, g->omega, g->sigma2});
    } else if (const auto* e = model.triggering->as<EtasPowerLaw>()) {
      if (model.uses_marks) {
        params.insert(params.end(), {e->k0, e->alpha, e->c, e->p, e->d, e->q});
      } else {
        params.insert(params.end(), {e->k0, e->c, e->p, e->d, e->q});
      }
    } else if (const auto* h = model.triggering->as<HistogramTriggering>()) {
      params.insert(params.end(), h->values.begin(), h->values.end());
    }
  }
  return params;
}

std::vector<std::string> model_parameter_names(const IntensityModel& model) {
  std::vector<std::string> names;
  if (model.background.as<ConstantBackground>()) names.push_back("nu");
  if (model.triggering) {
    if (model.triggering->as<GaussianExponential>()) {
      names.insert(names.end(), {"theta", "omega", "sigma2"});
    } else if (model.triggering->as<EtasPowerLaw>()) {
      if (model.uses_marks) {
        names.insert(names.end(), {"k0", "alpha", "c", "p", "d", "q"});
      } else {
        names.insert(names.end(), {"k0", "c", "p", "d", "q"});
      }
    } else if (const auto* h = model.triggering->as<HistogramTriggering>()) {
      for (std::size_t t = 0; t < h->time_bins(); ++t)
        for (std::size_t r = 0; r < h->radius_bins(); ++r)
          names.push_back("cell_" + std::to_string(t) + "_" + std::to_string(r));
    }
  }
  return names;
}

IntensityModel with_parameters(const IntensityModel& model,
                               const std::vector<double>& params) {
  const std::vector<double> current = model_parameters(model);
  if (params.size() != current.size())
    throw ValidationError("parameter vector length mismatch");
  IntensityModel out = model;
  std::size_t k = 0;
  if (model.background.as<ConstantBackground>()) {
    out.background = Background(ConstantBackground{params[k++]});
  }
  if (model.triggering) {
    if (const auto* g = model.triggering->as<GaussianExponential>()) {
      GaussianExponential next = *g;
      next.theta = params[k++];
      next.omega = params[k++];
      next.sigma2 = params[k++];
      out.triggering = Triggering(next);
    } else if (const auto* e = model.triggering->as<EtasPowerLaw>()) {
      EtasPowerLaw next = *e;
      next.k0 = params[k++];
      if (model.uses_marks) next.alpha = params[k++];
      next.c = params[k++];
      next.p = params[k++];
      next.d = params[k++];
      next.q = params[k++];
      out.triggering = Triggering(next);
    } else if (const auto* h = model.triggering->as<HistogramTriggering>()) {
      HistogramTriggering next = *h;
      for (double& v : next.values) v = params[k++];
      out.triggering = Triggering(next);
    }
  }
  return out;
}

}  // namespace sepp
