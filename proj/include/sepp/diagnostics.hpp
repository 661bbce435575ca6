#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sepp/catalog.hpp"
#include "sepp/intensity.hpp"
#include "sepp/models.hpp"

namespace sepp {

struct ResidualPoint {
  Event event;
  bool superposed = false;  // added by super-thinning rather than retained
};

enum class ResidualKind { thinned, superthinned };

// Residual point pattern; homogeneous Poisson at target_rate when the
// model is correct.
struct ResidualProcess {
  std::vector<ResidualPoint> points;
  double target_rate = 0.0;  // b for thinning, k for super-thinning
  ResidualKind kind = ResidualKind::thinned;
  bool uninformative = false;  // b near zero: too few retained events
};

// Thin each event with probability b / lambda(s_i, t_i), b = inf lambda.
ResidualProcess thin_residuals(const IntensityModel& model,
                               const EventCatalog& catalog,
                               const ObservationDomain& domain,
                               std::uint64_t seed,
                               const ExtremaResolution& res = {},
                               Exec exec = Exec::parallel);

// Thin above rate k and superpose a simulated Poisson process with rate
// max(k - lambda, 0); homogeneous at rate k under a correct model.
// Requires b <= k <= sup lambda (grid estimates; conservative).
ResidualProcess super_thin(const IntensityModel& model,
                           const EventCatalog& catalog,
                           const ObservationDomain& domain, double k,
                           std::uint64_t seed, const ExtremaResolution& res = {},
                           Exec exec = Exec::parallel);

struct KFunctionResult {
  std::vector<double> radii;
  std::vector<double> khat;
  std::vector<double> env_lo;
  std::vector<double> env_hi;
  bool radius_warning = false;  // some radius exceeded the domain diameter
};

// Ripley K estimate |X|/(n(n-1)) * #{ordered pairs within r}, without edge
// correction, plus a pointwise Monte Carlo envelope from homogeneous
// simulations with the same point count.
KFunctionResult k_function(const std::vector<Vec2>& points,
                           const SpatialRegion& region,
                           std::vector<double> radii, std::size_t n_sims = 999,
                           std::uint64_t seed = 0, Exec exec = Exec::parallel);

struct VoronoiCellResidual {
  Ring polygon;
  double area = 0.0;
  double integral = 0.0;      // fitted intensity integrated over cell x time
  double raw = 0.0;           // 1 - integral
  double standardized = 0.0;  // (1 - integral) / sqrt(integral), Poisson scale
};

struct VoronoiResidualMap {
  std::vector<VoronoiCellResidual> cells;
  double t0 = 0.0;
  double t1 = 0.0;
};

// Voronoi cells of the events clipped to X; per-cell residual against the
// intensity integrated over the cell and [t0, t1) (defaults to the whole
// window). The standardized value uses a Poisson mean/variance
// approximation and is not the reference distribution from the literature.
VoronoiResidualMap voronoi_residuals(const IntensityModel& model,
                                     const EventCatalog& catalog,
                                     const ObservationDomain& domain,
                                     std::optional<double> t0 = std::nullopt,
                                     std::optional<double> t1 = std::nullopt,
                                     Exec exec = Exec::parallel);

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
  std::optional<double> hq;  // absent for n < 3
};

InformationCriteria information_criteria(double loglik, std::size_t n_params,
                                         std::size_t n_events);

void save_k_function(const std::string& path, const KFunctionResult& k);
void save_voronoi_residuals(const std::string& path,
                            const VoronoiResidualMap& map);
void save_residual_process(const std::string& path, const ResidualProcess& r);

}  // namespace sepp
