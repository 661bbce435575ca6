#pragma once

#include <string>

#include "sepp/diagnostics.hpp"
#include "sepp/simulate.hpp"

namespace sepp {

// Event scatter over X, colored by provenance (background solid, triggered
// shaded by generation).
void write_scatter_svg(const std::string& path, const SimResult& result,
                       const ObservationDomain& domain);

// Plain catalog scatter without provenance.
void write_catalog_svg(const std::string& path, const EventCatalog& catalog,
                       const ObservationDomain& domain);

// Voronoi residual map: cells on a diverging scale (blue negative, red
// positive residuals).
void write_voronoi_svg(const std::string& path, const VoronoiResidualMap& map,
                       const ObservationDomain& domain);

// K-function estimate with its Monte Carlo envelope; one envelope whisker
// polyline per radius plus the estimate path.
void write_kfunction_svg(const std::string& path, const KFunctionResult& k);

}  // namespace sepp
