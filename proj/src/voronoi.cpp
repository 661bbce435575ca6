#include "sepp/voronoi.hpp"

#include <cmath>
#include <string>

#include "sepp/errors.hpp"

namespace sepp {

std::vector<Ring> voronoi_cells(const std::vector<Vec2>& sites,
                                const SpatialRegion& region, Exec exec) {
  const std::size_t n = sites.size();
  if (n < 3) throw ValidationError("voronoi_cells: need at least 3 sites");

  // Duplicate sites make cells degenerate.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (squared_norm(sites[i] - sites[j]) == 0.0)
        throw ValidationError("voronoi_cells: coincident sites " +
                              std::to_string(i) + " and " + std::to_string(j));
    }
  }
  // Collinearity check via the maximum triangle area.
  double max_cross = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    max_cross = std::max(
        max_cross, std::abs(cross(sites[i] - sites[0], sites[i + 1] - sites[0])));
  }
  const Rect box = region.bounding_box();
  const double scale = std::max(box.width(), box.height());
  if (max_cross <= 1e-12 * scale * scale)
    throw ValidationError("voronoi_cells: sites are collinear");

  const Ring boundary = region.boundary_ring();
  std::vector<Ring> cells(n);
  par_for(
      n,
      [&](std::size_t i) {
        Ring cell = boundary;
        for (std::size_t j = 0; j < n && !cell.empty(); ++j) {
          if (j == i) continue;
          // Keep the half-plane closer to site i: points p with
          // (p - midpoint) . (s_j - s_i) <= 0.
          const Vec2 mid{0.5 * (sites[i].x + sites[j].x),
                         0.5 * (sites[i].y + sites[j].y)};
          cell = clip_halfplane(cell, mid, sites[j] - sites[i]);
        }
        cells[i] = std::move(cell);
      },
      exec);
  return cells;
}

}  // namespace sepp
