#pragma once

#include <vector>

#include "sepp/geometry.hpp"
#include "sepp/parallel.hpp"

namespace sepp {

// Voronoi cells of the given sites clipped to the region, one polygon per
// site, by iterative half-plane clipping against every other site's
// perpendicular bisector. O(n^2) per build; fine at diagnostic scales.
// Throws on duplicate sites or fully collinear configurations.
std::vector<Ring> voronoi_cells(const std::vector<Vec2>& sites,
                                const SpatialRegion& region,
                                Exec exec = Exec::parallel);

}  // namespace sepp
