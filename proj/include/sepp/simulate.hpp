#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sepp/catalog.hpp"
#include "sepp/decluster.hpp"
#include "sepp/models.hpp"

namespace sepp {

enum class SimMethod { ogata, cluster };

// Exponential magnitude law above a threshold (Gutenberg-Richter style),
// used to mark simulated events when the model is marked.
struct MarkLaw {
  double beta = 2.3;
  double m0 = 0.0;
};

struct SimConfig {
  std::uint64_t seed = 0;
  // Lead-in before t = 0 and margin around X; negative values select the
  // default of five temporal/spatial triggering scales.
  double pad_time = -1.0;
  double pad_space = -1.0;
  SimMethod method = SimMethod::cluster;
  std::optional<MarkLaw> mark_law;
  std::size_t max_events = 20'000'000;
};

struct SimResult {
  EventCatalog catalog;             // clipped to X x [0, T)
  std::vector<Event> raw_events;    // padded window, time-ordered
  FamilyTree provenance;            // over raw_events
  std::vector<std::size_t> kept;    // raw index per catalog event
  std::size_t raw_count = 0;
};

// Lewis thinning against a dominating homogeneous rate over the padded
// window; exact for a constant background.
std::vector<Event> simulate_poisson_background(const Background& background,
                                               const ObservationDomain& domain,
                                               double pad_time, double pad_space,
                                               std::uint64_t seed);

// Cluster (branching) simulation: background catalog, then generations of
// Poisson(m) offspring drawn from the normalized triggering density.
// Requires subcritical mass m < 1.
SimResult simulate_cluster(const IntensityModel& model,
                           const ObservationDomain& domain,
                           const SimConfig& config);

// Ogata-style sequential thinning: exponential waiting times against a
// refreshing upper bound on the space-integrated intensity, then a location
// draw from the chosen component with out-of-window rejection.
SimResult simulate_ogata(const IntensityModel& model,
                         const ObservationDomain& domain,
                         const SimConfig& config);

SimResult simulate(const IntensityModel& model, const ObservationDomain& domain,
                   const SimConfig& config);

// Mean offspring count per event, taking the mark law into account for
// marked models; infinity when the law makes productivity non-integrable.
double expected_offspring_mass(const IntensityModel& model,
                               const std::optional<MarkLaw>& mark_law);

double default_pad_time(const IntensityModel& model);
double default_pad_space(const IntensityModel& model);

void save_provenance(const std::string& path, const SimResult& result);

}  // namespace sepp
