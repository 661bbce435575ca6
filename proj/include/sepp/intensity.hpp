#pragma once

#include <cstddef>
#include <optional>

#include "sepp/catalog.hpp"
#include "sepp/models.hpp"
#include "sepp/parallel.hpp"

namespace sepp {

// History-sum evaluation options. The default is exact summation over all
// prior events; a temporal cutoff may be supplied for families whose tail
// mass beyond the cutoff is negligible (the caller picks it via
// Triggering::cutoff_for_tail_mass).
struct HistoryOptions {
  std::optional<double> time_cutoff;
};

// lambda(s, t) = mu(s) + sum over events with t_i strictly < t.
double eval_intensity(const IntensityModel& model, const EventCatalog& catalog,
                      Vec2 s, double t, const HistoryOptions& history = {});

// Integral over t in [t0, t1) of lambda(s, t) at fixed s, counting only
// history events with t_i < t1. Closed form in time for every family.
double time_integrated_intensity(const IntensityModel& model,
                                 const EventCatalog& catalog, Vec2 s, double t0,
                                 double t1);

enum class IntegralMethod { schoenberg, cubature };

struct IntegralOptions {
  // schoenberg: use per-event triggering mass truncated at T - t_i instead
  // of the full mass over [0, inf).
  bool truncate_time = false;
  // cubature: midpoint grid resolution over the spatial bounding box.
  std::size_t nx = 256;
  std::size_t ny = 256;
  // cubature: if set, fail loudly when the Richardson error estimate
  // (|fine - coarse|) exceeds the tolerance.
  std::optional<double> tolerance;
};

// Integral of lambda over X x [0, T). The schoenberg method integrates the
// triggering part over all of space and time, an upper bound on the exact
// integral; cubature integrates the time-integrated intensity over X on a
// midpoint grid.
double integrated_intensity(const IntensityModel& model,
                            const EventCatalog& catalog,
                            const ObservationDomain& domain,
                            IntegralMethod method,
                            const IntegralOptions& options = {},
                            Exec exec = Exec::parallel);

struct ExtremaResolution {
  std::size_t nx = 200;
  std::size_t ny = 200;
  std::size_t nt = 200;
  bool refine = true;  // one local refinement pass around each extremum
};

struct IntensityExtrema {
  double inf_value = 0.0;
  double sup_value = 0.0;
};

// Grid estimates of inf/sup of lambda over X x [0, T). The grid infimum
// overestimates the true infimum and the grid supremum underestimates the
// true supremum, so [inf, sup] is conservative.
IntensityExtrema intensity_extrema(const IntensityModel& model,
                                   const EventCatalog& catalog,
                                   const ObservationDomain& domain,
                                   const ExtremaResolution& res = {},
                                   Exec exec = Exec::parallel);

}  // namespace sepp
