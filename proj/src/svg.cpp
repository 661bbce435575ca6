#include "sepp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sepp/errors.hpp"

namespace sepp {

namespace {

constexpr double kCanvas = 640.0;
constexpr double kMargin = 40.0;

struct Mapper {
  double x0, y0, sx, sy;
  double px(double x) const { return kMargin + (x - x0) * sx; }
  double py(double y) const { return kCanvas - kMargin - (y - y0) * sy; }
};

Mapper make_mapper(const Rect& box) {
  const double usable = kCanvas - 2.0 * kMargin;
  return {box.x0, box.y0, usable / std::max(box.width(), 1e-12),
          usable / std::max(box.height(), 1e-12)};
}

std::ofstream open_svg(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write svg file: " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas
      << "\" height=\"" << kCanvas << "\" viewBox=\"0 0 " << kCanvas << " "
      << kCanvas << "\">\n";
  return out;
}

void close_svg(std::ofstream& out) { out << "</svg>\n"; }

std::string diverging_color(double v) {
  // v in [-1, 1]: blue -> white -> red.
  const double t = std::clamp(v, -1.0, 1.0);
  int r, g, b;
  if (t < 0.0) {
    r = static_cast<int>(255 * (1.0 + t));
    g = static_cast<int>(255 * (1.0 + t));
    b = 255;
  } else {
    r = 255;
    g = static_cast<int>(255 * (1.0 - t));
    b = static_cast<int>(255 * (1.0 - t));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

void draw_region(std::ofstream& out, const ObservationDomain& domain,
                 const Mapper& m) {
  const Ring ring = domain.region.boundary_ring();
  out << "<polygon points=\"";
  for (const Vec2& v : ring) out << m.px(v.x) << ',' << m.py(v.y) << ' ';
  out << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
}

}  // namespace

void write_scatter_svg(const std::string& path, const SimResult& result,
                       const ObservationDomain& domain) {
  std::ofstream out = open_svg(path);
  const Mapper m = make_mapper(domain.region.bounding_box());
  draw_region(out, domain, m);
  for (std::size_t k = 0; k < result.catalog.size(); ++k) {
    const Event& e = result.catalog[k];
    const std::size_t raw = result.kept[k];
    const std::int32_t gen = result.provenance.generation[raw];
    const char* color = gen == 0 ? "#202020" : (gen == 1 ? "#1f77d0" : "#73b3f0");
    out << "<circle cx=\"" << m.px(e.x) << "\" cy=\"" << m.py(e.y)
        << "\" r=\"2.2\" fill=\"" << color << "\"/>\n";
  }
  close_svg(out);
}

void write_catalog_svg(const std::string& path, const EventCatalog& catalog,
                       const ObservationDomain& domain) {
  std::ofstream out = open_svg(path);
  const Mapper m = make_mapper(domain.region.bounding_box());
  draw_region(out, domain, m);
  for (const Event& e : catalog) {
    out << "<circle cx=\"" << m.px(e.x) << "\" cy=\"" << m.py(e.y)
        << "\" r=\"2.2\" fill=\"#202020\"/>\n";
  }
  close_svg(out);
}

void write_voronoi_svg(const std::string& path, const VoronoiResidualMap& map,
                       const ObservationDomain& domain) {
  std::ofstream out = open_svg(path);
  const Mapper m = make_mapper(domain.region.bounding_box());
  double scale = 1e-12;
  for (const VoronoiCellResidual& c : map.cells)
    scale = std::max(scale, std::abs(c.standardized));
  for (const VoronoiCellResidual& c : map.cells) {
    if (c.polygon.size() < 3) continue;
    out << "<polygon points=\"";
    for (const Vec2& v : c.polygon) out << m.px(v.x) << ',' << m.py(v.y) << ' ';
    out << "\" fill=\"" << diverging_color(c.standardized / scale)
        << "\" stroke=\"#666666\" stroke-width=\"0.5\"/>\n";
  }
  draw_region(out, domain, m);
  close_svg(out);
}

void write_kfunction_svg(const std::string& path, const KFunctionResult& k) {
  std::ofstream out = open_svg(path);
  double ymax = 1e-12;
  for (std::size_t i = 0; i < k.radii.size(); ++i) {
    ymax = std::max({ymax, k.khat[i], k.env_hi[i]});
  }
  const Rect frame{0.0, k.radii.back() * 1.05, 0.0, ymax * 1.05};
  const Mapper m = make_mapper(frame);

  // Axes.
  out << "<path d=\"M " << m.px(0) << ' ' << m.py(0) << " L "
      << m.px(frame.x1) << ' ' << m.py(0) << "\" stroke=\"#000\" fill=\"none\"/>\n";
  out << "<path d=\"M " << m.px(0) << ' ' << m.py(0) << " L " << m.px(0) << ' '
      << m.py(frame.y1) << "\" stroke=\"#000\" fill=\"none\"/>\n";

  // Envelope whiskers: one polyline per radius.
  for (std::size_t i = 0; i < k.radii.size(); ++i) {
    out << "<polyline points=\"" << m.px(k.radii[i]) << ',' << m.py(k.env_lo[i])
        << ' ' << m.px(k.radii[i]) << ',' << m.py(k.env_hi[i])
        << "\" stroke=\"#9ecae1\" stroke-width=\"3\" fill=\"none\"/>\n";
  }
  // Estimate path.
  out << "<path d=\"";
  for (std::size_t i = 0; i < k.radii.size(); ++i) {
    out << (i == 0 ? "M " : "L ") << m.px(k.radii[i]) << ' ' << m.py(k.khat[i])
        << ' ';
  }
  out << "\" stroke=\"#d62728\" stroke-width=\"1.5\" fill=\"none\"/>\n";
  out << "<text x=\"" << kCanvas - 3.0 * kMargin << "\" y=\""
      << kCanvas - 0.5 * kMargin << "\" font-size=\"14\">r</text>\n";
  close_svg(out);
}

}  // namespace sepp
