#include "sepp/decluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sepp/errors.hpp"
#include "sepp/rng.hpp"

namespace sepp {

Declustering thin_to_background(const BranchingMatrix& branching,
                                const EventCatalog& catalog, std::uint64_t seed) {
  if (branching.size() != catalog.size())
    throw ValidationError("branching matrix does not match catalog");
  Declustering out;
  out.seed = seed;
  out.labels.resize(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    Rng rng(derive_stream(derive_stream(seed, kStreamThinning), i));
    out.labels[i] = rng.u01() < branching.p_background[i]
                        ? EventLabel::background
                        : EventLabel::triggered;
  }
  return out;
}

FamilyTree sample_family_tree(const BranchingMatrix& branching,
                              const EventCatalog& catalog, std::uint64_t seed) {
  if (branching.size() != catalog.size())
    throw ValidationError("branching matrix does not match catalog");
  const std::size_t n = catalog.size();
  FamilyTree tree;
  tree.parent.assign(n, -1);
  tree.generation.assign(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_stream(derive_stream(seed, kStreamThinning), i));
    const double r = rng.u01();
    double cum = branching.p_background[i];
    if (r < cum) continue;  // background
    std::int64_t chosen = -1;
    for (const auto& [j, p] : branching.parents[i]) {
      cum += p;
      if (r < cum) {
        chosen = static_cast<std::int64_t>(j);
        break;
      }
    }
    if (chosen < 0 && !branching.parents[i].empty()) {
      // r landed in the sliver of dropped probability mass; attribute to
      // the last stored parent.
      chosen = static_cast<std::int64_t>(branching.parents[i].back().first);
    }
    tree.parent[i] = chosen;
  }
  // Generations by a forward pass; parents always precede children.
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.parent[i] >= 0) {
      tree.generation[i] = tree.generation[static_cast<std::size_t>(tree.parent[i])] + 1;
    }
  }
  return tree;
}

std::vector<double> default_log_edges(std::vector<double> pair_values,
                                      std::size_t bins) {
  if (pair_values.empty() || bins == 0)
    throw ValidationError("default_log_edges: empty input");
  std::sort(pair_values.begin(), pair_values.end());
  auto pick = [&](double q) {
    const std::size_t idx = static_cast<std::size_t>(
        q * static_cast<double>(pair_values.size() - 1));
    return pair_values[idx];
  };
  double lo = std::max(pick(0.01), 1e-12);
  double hi = std::max(pick(0.99), lo * 10.0);
  std::vector<double> edges(bins + 1);
  const double step = std::log(hi / lo) / static_cast<double>(bins);
  edges[0] = 0.0;  // first bin starts at zero lag/distance
  for (std::size_t i = 1; i <= bins; ++i)
    edges[i] = lo * std::exp(step * static_cast<double>(i));
  return edges;
}

namespace {

Background misd_background_update(const MisdOptions& options,
                                  const BranchingMatrix& branching,
                                  const EventCatalog& catalog,
                                  const ObservationDomain& domain) {
  if (options.background == MisdOptions::BackgroundKind::constant) {
    const double nu = branching.expected_background_count() /
                      (domain_area(domain) * domain.t_end);
    return Background(ConstantBackground{nu});
  }
  GridBackground grid;
  grid.rect = domain.region.bounding_box();
  grid.nx = options.grid_nx;
  grid.ny = options.grid_ny;
  grid.values.assign(grid.nx * grid.ny, 0.0);
  const double cell_area = grid.rect.area() /
                           static_cast<double>(grid.nx * grid.ny);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const Event& e = catalog[i];
    const double fx = (e.x - grid.rect.x0) / grid.rect.width() *
                      static_cast<double>(grid.nx);
    const double fy = (e.y - grid.rect.y0) / grid.rect.height() *
                      static_cast<double>(grid.ny);
    const std::size_t ix =
        std::min(static_cast<std::size_t>(std::max(fx, 0.0)), grid.nx - 1);
    const std::size_t iy =
        std::min(static_cast<std::size_t>(std::max(fy, 0.0)), grid.ny - 1);
    grid.values[iy * grid.nx + ix] += branching.p_background[i];
  }
  for (double& v : grid.values) v /= cell_area * domain.t_end;
  return Background(std::move(grid));
}

}  // namespace

MisdResult misd_fit(const EventCatalog& catalog, const ObservationDomain& domain,
                    std::vector<double> time_edges,
                    std::vector<double> radius_edges, const MisdOptions& options,
                    Exec exec) {
  if (catalog.empty()) throw ValidationError("misd_fit: empty catalog");
  for (std::size_t i = 1; i < time_edges.size(); ++i)
    if (time_edges[i] <= time_edges[i - 1])
      throw ValidationError("misd time edges must be strictly increasing");
  for (std::size_t i = 1; i < radius_edges.size(); ++i)
    if (radius_edges[i] <= radius_edges[i - 1])
      throw ValidationError("misd radius edges must be strictly increasing");

  HistogramTriggering hist;
  hist.time_edges = std::move(time_edges);
  hist.radius_edges = std::move(radius_edges);
  const std::size_t nt = hist.time_bins();
  const std::size_t nr = hist.radius_bins();
  hist.values.assign(nt * nr, 0.0);
  // Uniform-mass start.
  double total_measure = 0.0;
  for (std::size_t ti = 0; ti < nt; ++ti)
    for (std::size_t ri = 0; ri < nr; ++ri)
      total_measure += hist.cell_measure(ti, ri);
  for (double& v : hist.values) v = options.initial_mass / total_measure;

  MisdResult result;
  IntensityModel model;
  model.triggering = Triggering(hist);
  model.background = Background(ConstantBackground{
      0.5 * static_cast<double>(catalog.size()) /
      (domain_area(domain) * domain.t_end)});
  if (options.background == MisdOptions::BackgroundKind::grid) {
    // Start from a flat grid at the same level.
    GridBackground grid;
    grid.rect = domain.region.bounding_box();
    grid.nx = options.grid_nx;
    grid.ny = options.grid_ny;
    grid.values.assign(grid.nx * grid.ny,
                       0.5 * static_cast<double>(catalog.size()) /
                           (grid.rect.area() * domain.t_end));
    model.background = Background(std::move(grid));
  }

  LoglikOptions ll_options;  // schoenberg; exact history
  double ll_prev = -std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    result.iterations = iter + 1;
    BranchingMatrix branching = branching_probabilities(model, catalog, {}, exec);

    // Closed-form M step: per-cell rate and background level.
    const std::size_t n = catalog.size();
    const HistogramTriggering& cur = *model.triggering->as<HistogramTriggering>();
    const std::vector<double> cell_weight = det_sum_multi(
        n, nt * nr,
        [&](std::size_t i, auto add) {
          const Event& child = catalog[i];
          for (const auto& [j, p] : branching.parents[i]) {
            const Event& parent = catalog[j];
            const double dt = child.t - parent.t;
            const double r = std::sqrt(
                squared_norm(child.location() - parent.location()));
            if (dt < cur.time_edges.front() || dt >= cur.time_edges.back())
              continue;
            if (r < cur.radius_edges.front() || r >= cur.radius_edges.back())
              continue;
            const auto ti = static_cast<std::size_t>(
                std::upper_bound(cur.time_edges.begin(), cur.time_edges.end(),
                                 dt) -
                cur.time_edges.begin() - 1);
            const auto ri = static_cast<std::size_t>(
                std::upper_bound(cur.radius_edges.begin(),
                                 cur.radius_edges.end(), r) -
                cur.radius_edges.begin() - 1);
            add(ti * nr + ri, p);
          }
        },
        exec);

    HistogramTriggering next = cur;
    for (std::size_t c = 0; c < nt * nr; ++c) {
      next.values[c] =
          cell_weight[c] / (static_cast<double>(n) * cur.cell_measure(
                                                         c / nr, c % nr));
    }
    model.triggering = Triggering(next);
    model.background = misd_background_update(options, branching, catalog, domain);

    const double ll = log_likelihood(model, catalog, domain, ll_options, exec);
    result.loglik_trace.push_back(ll);
    const bool settled = iter > 0 && std::abs(ll - ll_prev) < options.loglik_tol;
    ll_prev = ll;
    if (settled) {
      result.converged = true;
      break;
    }
  }

  result.branching = branching_probabilities(model, catalog, {}, exec);
  result.histogram = *model.triggering;
  result.background = model.background;
  const HistogramTriggering& fitted = *result.histogram.as<HistogramTriggering>();
  for (std::size_t c = 0; c < fitted.values.size(); ++c) {
    if (fitted.values[c] == 0.0) result.empty_cells.push_back(c);
  }
  return result;
}

void save_declustering(const std::string& path, const Declustering& declustering) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write declustering file: " + path);
  out << "event_index,label\n";
  for (std::size_t i = 0; i < declustering.labels.size(); ++i) {
    out << (i + 1) << ','
        << (declustering.labels[i] == EventLabel::background ? "background"
                                                             : "triggered")
        << '\n';
  }
}

void save_family_tree(const std::string& path, const FamilyTree& tree) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write family tree file: " + path);
  out << "event_index,label,parent,generation\n";
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const bool background = tree.parent[i] < 0;
    out << (i + 1) << ',' << (background ? "background" : "triggered") << ','
        << (background ? 0 : tree.parent[i] + 1) << ',' << tree.generation[i]
        << '\n';
  }
}

}  // namespace sepp
