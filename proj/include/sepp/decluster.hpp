#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepp/fit_em.hpp"

namespace sepp {

enum class EventLabel : std::uint8_t { background, triggered };

// One stochastic declustering: per-event background/triggered labels.
struct Declustering {
  std::vector<EventLabel> labels;
  std::uint64_t seed = 0;

  std::size_t background_count() const {
    std::size_t c = 0;
    for (EventLabel l : labels)
      if (l == EventLabel::background) ++c;
    return c;
  }
};

// Sampled ancestry: parent[i] is the index of the triggering event, or -1
// for background events; generation is 0 for background and increments by
// one along each branch.
struct FamilyTree {
  std::vector<std::int64_t> parent;
  std::vector<std::int32_t> generation;

  std::size_t size() const { return parent.size(); }
};

// Keep each event independently with probability Pr(u_i = 0).
Declustering thin_to_background(const BranchingMatrix& branching,
                                const EventCatalog& catalog, std::uint64_t seed);

// Draw one R_i ~ Uniform(0,1) per event; background if R_i < Pr(u_i = 0),
// otherwise the parent is the smallest J whose cumulative probability
// exceeds R_i.
FamilyTree sample_family_tree(const BranchingMatrix& branching,
                              const EventCatalog& catalog, std::uint64_t seed);

// Model-independent stochastic declustering: EM with a piecewise-constant
// triggering histogram and a constant or piecewise-constant background.
struct MisdOptions {
  enum class BackgroundKind { constant, grid };
  BackgroundKind background = BackgroundKind::constant;
  std::size_t grid_nx = 8;
  std::size_t grid_ny = 8;
  double loglik_tol = 1e-6;
  std::size_t max_iter = 200;
  double initial_mass = 0.3;  // starting histogram mass, spread uniformly
};

struct MisdResult {
  Triggering histogram{HistogramTriggering{{0.0, 1.0}, {0.0, 1.0}, {0.0}}};
  Background background{ConstantBackground{}};
  BranchingMatrix branching;
  std::vector<double> loglik_trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::size_t> empty_cells;  // flattened indices with zero weight
};

MisdResult misd_fit(const EventCatalog& catalog, const ObservationDomain& domain,
                    std::vector<double> time_edges,
                    std::vector<double> radius_edges,
                    const MisdOptions& options = {}, Exec exec = Exec::parallel);

// Data-scaled default bin edges: logarithmic bins spanning the 1st-99th
// percentile of pairwise lags (or distances).
std::vector<double> default_log_edges(std::vector<double> pair_values,
                                      std::size_t bins);

void save_declustering(const std::string& path, const Declustering& declustering);
void save_family_tree(const std::string& path, const FamilyTree& tree);

}  // namespace sepp
