#include "sepp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "sepp/errors.hpp"
#include "sepp/rng.hpp"

namespace sepp {

double expected_offspring_mass(const IntensityModel& model,
                               const std::optional<MarkLaw>& mark_law) {
  if (!model.triggering) return 0.0;
  const Triggering& trig = *model.triggering;
  if (mark_law && model.uses_marks) {
    if (const auto* e = trig.as<EtasPowerLaw>()) {
      if (mark_law->beta <= e->alpha)
        return std::numeric_limits<double>::infinity();
      const double mark_factor = mark_law->beta / (mark_law->beta - e->alpha);
      return e->k0 * mark_factor * std::pow(e->c, 1.0 - e->p) / (e->p - 1.0);
    }
  }
  return trig.mass(std::nullopt);
}

double default_pad_time(const IntensityModel& model) {
  return model.triggering ? 5.0 * model.triggering->temporal_scale() : 0.0;
}

double default_pad_space(const IntensityModel& model) {
  return model.triggering ? 5.0 * model.triggering->spatial_scale() : 0.0;
}

std::vector<Event> simulate_poisson_background(const Background& background,
                                               const ObservationDomain& domain,
                                               double pad_time, double pad_space,
                                               std::uint64_t seed) {
  const Rect box = domain.region.bounding_box().padded(pad_space);
  const double t_start = -pad_time;
  const double duration = domain.t_end - t_start;
  const double mu_max = background.sup_bound(box);
  std::vector<Event> events;
  if (mu_max <= 0.0) return events;

  Rng rng(derive_stream(seed, kStreamBackground));
  const long count = rng.poisson(mu_max * box.area() * duration);
  events.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) {
    Event e;
    e.t = t_start + rng.u01() * duration;
    e.x = box.x0 + rng.u01() * box.width();
    e.y = box.y0 + rng.u01() * box.height();
    const double accept = rng.u01();
    if (accept * mu_max < background.eval(e.location())) events.push_back(e);
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  return events;
}

namespace {

struct RawEvent {
  Event event;
  std::int64_t parent = -1;  // index into the raw vector (pre-sort)
  std::int32_t generation = 0;
  std::uint64_t lineage = 0;  // stream seed owned by this event
};

double sample_mark(Rng& rng, const MarkLaw& law) {
  return law.m0 + rng.exponential(law.beta);
}

SimResult assemble_result(std::vector<RawEvent> raw,
                          const ObservationDomain& domain) {
  // Deterministic final order by (t, x, y); remap parent indices.
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Event& ea = raw[a].event;
    const Event& eb = raw[b].event;
    if (ea.t != eb.t) return ea.t < eb.t;
    if (ea.x != eb.x) return ea.x < eb.x;
    return ea.y < eb.y;
  });
  std::vector<std::size_t> rank(raw.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos;

  SimResult result;
  result.raw_count = raw.size();
  result.raw_events.resize(raw.size());
  result.provenance.parent.resize(raw.size());
  result.provenance.generation.resize(raw.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const RawEvent& r = raw[order[pos]];
    result.raw_events[pos] = r.event;
    result.provenance.parent[pos] =
        r.parent < 0 ? -1
                     : static_cast<std::int64_t>(
                           rank[static_cast<std::size_t>(r.parent)]);
    result.provenance.generation[pos] = r.generation;
  }

  std::vector<Event> inside;
  for (std::size_t pos = 0; pos < result.raw_events.size(); ++pos) {
    const Event& e = result.raw_events[pos];
    if (e.t >= 0.0 && e.t < domain.t_end && domain.contains(e.location())) {
      inside.push_back(e);
      result.kept.push_back(pos);
    }
  }
  result.catalog =
      EventCatalog::from_events(std::move(inside), domain, OutsidePolicy::error);
  return result;
}

}  // namespace

SimResult simulate_cluster(const IntensityModel& model,
                           const ObservationDomain& domain,
                           const SimConfig& config) {
  const double pad_time =
      config.pad_time >= 0.0 ? config.pad_time : default_pad_time(model);
  const double pad_space =
      config.pad_space >= 0.0 ? config.pad_space : default_pad_space(model);

  const double mass = expected_offspring_mass(model, config.mark_law);
  if (mass >= 1.0)
    throw ValidationError(
        "supercritical triggering (mean offspring >= 1); refusing to simulate");

  std::vector<Event> background = simulate_poisson_background(
      model.background, domain, pad_time, pad_space, config.seed);
  if (config.mark_law) {
    Rng mark_rng(derive_stream(config.seed, kStreamMarks));
    for (Event& e : background) e.mark = sample_mark(mark_rng, *config.mark_law);
  }

  std::vector<RawEvent> raw;
  raw.reserve(background.size() * 2 + 16);
  const std::uint64_t offspring_base =
      derive_stream(config.seed, kStreamOffspring);
  for (std::size_t k = 0; k < background.size(); ++k) {
    RawEvent r;
    r.event = background[k];
    r.parent = -1;
    r.generation = 0;
    r.lineage = derive_stream(offspring_base, k);
    raw.push_back(r);
  }

  // Generation-by-generation expansion. Offspring streams derive from the
  // parent lineage, so the result is independent of expansion order.
  std::vector<std::size_t> frontier(raw.size());
  std::iota(frontier.begin(), frontier.end(), 0);
  std::int32_t generation = 0;
  while (!frontier.empty()) {
    ++generation;
    if (generation > 100000)
      throw NumericalError("cluster simulation exceeded the generation cap");
    std::vector<std::vector<RawEvent>> children(frontier.size());
    par_for(frontier.size(), [&](std::size_t f) {
      const std::size_t parent_idx = frontier[f];
      const RawEvent parent = raw[parent_idx];
      Rng rng(derive_stream(parent.lineage, 0));
      const double parent_mass =
          model.triggering ? model.triggering->mass(parent.event.mark) : 0.0;
      const long n_children = parent_mass > 0.0 ? rng.poisson(parent_mass) : 0;
      std::vector<RawEvent> kids;
      kids.reserve(static_cast<std::size_t>(n_children));
      for (long c = 0; c < n_children; ++c) {
        Rng child_rng(derive_stream(parent.lineage,
                                    static_cast<std::uint64_t>(c) + 1));
        const TriggeringOffset off =
            model.triggering->sample_offset(child_rng, parent.event.mark);
        RawEvent kid;
        kid.event.t = parent.event.t + off.dt;
        kid.event.x = parent.event.x + off.ds.x;
        kid.event.y = parent.event.y + off.ds.y;
        if (config.mark_law)
          kid.event.mark = sample_mark(child_rng, *config.mark_law);
        kid.parent = static_cast<std::int64_t>(parent_idx);
        kid.generation = generation;
        kid.lineage = derive_stream(child_rng.next(), c + 1);
        kids.push_back(kid);
      }
      children[f] = std::move(kids);
    });
    std::vector<std::size_t> next_frontier;
    for (std::size_t f = 0; f < children.size(); ++f) {
      for (RawEvent& kid : children[f]) {
        if (raw.size() >= config.max_events)
          throw NumericalError("cluster simulation exceeded max_events");
        next_frontier.push_back(raw.size());
        raw.push_back(std::move(kid));
      }
    }
    frontier = std::move(next_frontier);
  }

  return assemble_result(std::move(raw), domain);
}

SimResult simulate_ogata(const IntensityModel& model,
                         const ObservationDomain& domain,
                         const SimConfig& config) {
  const double pad_time =
      config.pad_time >= 0.0 ? config.pad_time : default_pad_time(model);
  const double pad_space =
      config.pad_space >= 0.0 ? config.pad_space : default_pad_space(model);

  const double mass = expected_offspring_mass(model, config.mark_law);
  if (mass >= 1.0)
    throw ValidationError(
        "supercritical triggering (mean offspring >= 1); refusing to simulate");

  const Rect box = domain.region.bounding_box().padded(pad_space);
  const double nu0 = model.background.integral_over_rect(box);
  const double mu_max = model.background.sup_bound(box);

  Rng rng(derive_stream(config.seed, kStreamOgata));
  Rng mark_rng(derive_stream(config.seed, kStreamMarks));

  std::vector<RawEvent> raw;
  double t_cur = -pad_time;
  std::size_t proposals = 0;
  const std::size_t proposal_cap = config.max_events * 64 + 1000000;

  auto marginal = [&](const RawEvent& r, double t) {
    return model.triggering
               ? model.triggering->temporal_marginal(t - r.event.t, r.event.mark)
               : 0.0;
  };
  auto marginal_bound = [&](const RawEvent& r, double t) {
    return model.triggering ? model.triggering->temporal_marginal_bound(
                                  t - r.event.t, r.event.mark)
                            : 0.0;
  };

  while (t_cur < domain.t_end) {
    if (++proposals > proposal_cap)
      throw NumericalError("ogata simulation stalled (proposal cap reached)");

    // Refreshing upper bound on lambda_X from the current time onward.
    double bound = nu0;
    for (const RawEvent& r : raw) bound += marginal_bound(r, t_cur);
    if (bound <= 0.0) break;

    const double wait = rng.exponential(bound);
    const double t_prop = t_cur + wait;
    t_cur = t_prop;
    if (t_prop >= domain.t_end) break;

    double lambda_x = nu0;
    for (const RawEvent& r : raw) lambda_x += marginal(r, t_prop);
    const double u_accept = rng.u01();
    if (u_accept * bound > lambda_x) continue;  // thinned; bound refreshes

    // Component choice: background (J = 0) or a parent event.
    const double u_pick = rng.u01() * lambda_x;
    std::int64_t chosen = -1;
    double cum = nu0;
    if (u_pick >= nu0) {
      for (std::size_t j = 0; j < raw.size(); ++j) {
        cum += marginal(raw[j], t_prop);
        if (u_pick < cum) {
          chosen = static_cast<std::int64_t>(j);
          break;
        }
      }
      if (chosen < 0) chosen = static_cast<std::int64_t>(raw.size()) - 1;
    }

    RawEvent next;
    next.event.t = t_prop;
    if (chosen < 0) {
      // Background location by rejection against the dominating rate.
      if (mu_max <= 0.0) continue;
      bool placed = false;
      for (int tries = 0; tries < 1000000; ++tries) {
        const Vec2 s{box.x0 + rng.u01() * box.width(),
                     box.y0 + rng.u01() * box.height()};
        if (rng.u01() * mu_max < model.background.eval(s)) {
          next.event.x = s.x;
          next.event.y = s.y;
          placed = true;
          break;
        }
      }
      if (!placed)
        throw NumericalError("ogata simulation: background sampler stalled");
      next.parent = -1;
      next.generation = 0;
    } else {
      const RawEvent& parent = raw[static_cast<std::size_t>(chosen)];
      const TriggeringOffset off =
          model.triggering->sample_offset(rng, parent.event.mark);
      const Vec2 s = parent.event.location() + off.ds;
      if (!box.contains(s)) continue;  // outside the window: discard proposal
      next.event.x = s.x;
      next.event.y = s.y;
      next.parent = chosen;
      next.generation = parent.generation + 1;
    }
    if (config.mark_law) next.event.mark = sample_mark(mark_rng, *config.mark_law);
    if (raw.size() >= config.max_events)
      throw NumericalError("ogata simulation exceeded max_events");
    raw.push_back(next);
  }

  return assemble_result(std::move(raw), domain);
}

SimResult simulate(const IntensityModel& model, const ObservationDomain& domain,
                   const SimConfig& config) {
  return config.method == SimMethod::cluster ? simulate_cluster(model, domain, config)
                                             : simulate_ogata(model, domain, config);
}

void save_provenance(const std::string& path, const SimResult& result) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write provenance file: " + path);
  out << "event_index,label,parent,generation\n";
  for (std::size_t k = 0; k < result.kept.size(); ++k) {
    const std::size_t raw_idx = result.kept[k];
    const std::int64_t parent = result.provenance.parent[raw_idx];
    const bool background = parent < 0;
    // Parent indices refer to catalog positions when the parent survived
    // clipping, 0 otherwise (offspring of an unobserved event).
    std::int64_t parent_catalog = 0;
    if (!background) {
      const auto it = std::lower_bound(result.kept.begin(), result.kept.end(),
                                       static_cast<std::size_t>(parent));
      if (it != result.kept.end() &&
          *it == static_cast<std::size_t>(parent)) {
        parent_catalog = (it - result.kept.begin()) + 1;
      }
    }
    out << (k + 1) << ',' << (background ? "background" : "triggered") << ','
        << parent_catalog << ',' << result.provenance.generation[raw_idx]
        << '\n';
  }
}

}  // namespace sepp
