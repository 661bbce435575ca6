#include "sepp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sepp/errors.hpp"

namespace sepp {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

Config Config::parse_text(const std::string& text) {
  Config config;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw ValidationError("config line " + std::to_string(lineno) +
                              ": malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key = value");
    std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": empty key");
    if (!section.empty()) key = section + "." + key;
    config.set(key, value);
  }
  return config;
}

std::size_t Config::find(const std::string& key) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first == key) return i;
  }
  return static_cast<std::size_t>(-1);
}

bool Config::has(const std::string& key) const {
  return find(key) != static_cast<std::size_t>(-1);
}

std::string Config::get_string(const std::string& key) const {
  const std::size_t i = find(key);
  if (i == static_cast<std::size_t>(-1))
    throw ValidationError("missing required config key '" + key + "'");
  return entries_[i].second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const std::size_t i = find(key);
  return i == static_cast<std::size_t>(-1) ? fallback : entries_[i].second;
}

double Config::get_double(const std::string& key) const {
  const std::string raw = get_string(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' is not a number: '" + raw +
                          "'");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  if (!has(key)) return fallback;
  const double v = get_double(key);
  if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw ValidationError("config key '" + key +
                          "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get_string(key);
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw ValidationError("config key '" + key + "' must be a boolean, got '" +
                        raw + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const std::string raw = get_string(key);
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string token;
  while (ss >> token) {
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw ValidationError("config key '" + key +
                            "' contains a non-numeric entry: '" + token + "'");
    }
  }
  if (out.empty())
    throw ValidationError("config key '" + key + "' is an empty list");
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  const std::size_t i = find(key);
  if (i == static_cast<std::size_t>(-1)) {
    entries_.emplace_back(key, value);
  } else {
    entries_[i].second = value;
  }
}

void Config::set_double(const std::string& key, double value) {
  set(key, format_double(value));
}

void Config::set_size(const std::string& key, std::size_t value) {
  set(key, std::to_string(value));
}

void Config::set_bool(const std::string& key, bool value) {
  set(key, value ? "true" : "false");
}

void Config::set_doubles(const std::string& key,
                         const std::vector<double>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ' ';
    joined += format_double(values[i]);
  }
  set(key, joined);
}

void Config::check_allowed(const std::set<std::string>& keys,
                           const std::vector<std::string>& prefixes) const {
  for (const auto& [key, value] : entries_) {
    (void)value;
    if (keys.count(key)) continue;
    bool ok = false;
    for (const std::string& prefix : prefixes) {
      if (key.rfind(prefix, 0) == 0) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ValidationError("unknown config key '" + key + "'");
  }
}

std::string Config::serialize() const {
  // Group by the part before the first dot; bare keys come first.
  std::ostringstream out;
  std::vector<std::string> sections;
  for (const auto& [key, value] : entries_) {
    if (key.find('.') == std::string::npos) out << key << " = " << value << "\n";
  }
  for (const auto& [key, value] : entries_) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) continue;
    const std::string section = key.substr(0, dot);
    if (std::find(sections.begin(), sections.end(), section) == sections.end())
      sections.push_back(section);
  }
  for (const std::string& section : sections) {
    out << "\n[" << section << "]\n";
    for (const auto& [key, value] : entries_) {
      const auto dot = key.find('.');
      if (dot == std::string::npos || key.substr(0, dot) != section) continue;
      out << key.substr(dot + 1) << " = " << value << "\n";
    }
  }
  return out.str();
}

void Config::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write config file: " + path);
  out << serialize();
}

// ----------------------------------------------------------------------
// Domain / model serialization
// ----------------------------------------------------------------------

ObservationDomain domain_from_config(const Config& config) {
  ObservationDomain domain;
  const std::string shape = config.get_string("domain.shape", "rectangle");
  if (shape == "rectangle") {
    Rect r;
    r.x0 = config.get_double("domain.x_min");
    r.x1 = config.get_double("domain.x_max");
    r.y0 = config.get_double("domain.y_min");
    r.y1 = config.get_double("domain.y_max");
    domain.region = SpatialRegion::rectangle(r);
  } else if (shape == "polygon") {
    const std::vector<double> coords = config.get_doubles("domain.polygon");
    if (coords.size() < 6 || coords.size() % 2 != 0)
      throw ValidationError(
          "config key 'domain.polygon' needs an even list of >= 6 coordinates");
    Ring ring;
    for (std::size_t i = 0; i < coords.size(); i += 2)
      ring.push_back({coords[i], coords[i + 1]});
    domain.region = SpatialRegion::polygon(std::move(ring));
  } else {
    throw ValidationError("config key 'domain.shape' must be rectangle or polygon");
  }
  domain.t_end = config.get_double("domain.t_end");
  if (!(domain.t_end > 0.0))
    throw ValidationError("config key 'domain.t_end' must be > 0");
  return domain;
}

void domain_to_config(Config& config, const ObservationDomain& domain) {
  if (domain.region.is_rectangle()) {
    const Rect& r = *domain.region.as_rect();
    config.set("domain.shape", "rectangle");
    config.set_double("domain.x_min", r.x0);
    config.set_double("domain.x_max", r.x1);
    config.set_double("domain.y_min", r.y0);
    config.set_double("domain.y_max", r.y1);
  } else {
    config.set("domain.shape", "polygon");
    std::vector<double> coords;
    for (const Vec2& v : *domain.region.as_polygon()) {
      coords.push_back(v.x);
      coords.push_back(v.y);
    }
    config.set_doubles("domain.polygon", coords);
  }
  config.set_double("domain.t_end", domain.t_end);
}

IntensityModel model_from_config(const Config& config,
                                 const std::string& base_dir) {
  IntensityModel model;
  const std::string background = config.get_string("model.background", "constant");
  if (background == "constant") {
    model.background = Background(ConstantBackground{
        config.get_double("model.nu", 1.0)});
  } else if (background == "grid") {
    GridBackground grid;
    grid.rect.x0 = config.get_double("model.grid_x_min");
    grid.rect.x1 = config.get_double("model.grid_x_max");
    grid.rect.y0 = config.get_double("model.grid_y_min");
    grid.rect.y1 = config.get_double("model.grid_y_max");
    grid.nx = config.get_size("model.grid_nx", 1);
    grid.ny = config.get_size("model.grid_ny", 1);
    grid.values = config.get_doubles("model.grid_values");
    model.background = Background(std::move(grid));
  } else if (background == "kde") {
    const std::string file = config.get_string("model.kde_file");
    const std::string path =
        base_dir.empty() || file.front() == '/' ? file : base_dir + "/" + file;
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open kde background file: " + path);
    std::string header;
    std::getline(in, header);
    if (trim(header) != "x,y,weight,bandwidth")
      throw ValidationError("kde background file must start with "
                            "'x,y,weight,bandwidth': " + path);
    KdeBackground kde;
    std::string line;
    while (std::getline(in, line)) {
      const std::string body = trim(line);
      if (body.empty()) continue;
      std::stringstream ss(body);
      std::string field;
      std::vector<double> vals;
      while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
      if (vals.size() != 4)
        throw ValidationError("malformed kde background row in " + path);
      kde.points.push_back({vals[0], vals[1]});
      kde.weights.push_back(vals[2]);
      kde.bandwidths.push_back(vals[3]);
    }
    kde.time_norm = config.get_double("model.kde_time_norm");
    model.background = Background(std::move(kde));
  } else {
    throw ValidationError(
        "config key 'model.background' must be constant, grid, or kde");
  }

  const std::string family = config.get_string("model.triggering", "none");
  if (family == "none") {
    model.triggering.reset();
  } else if (family == "gaussian_exponential") {
    GaussianExponential g;
    g.theta = config.get_double("model.theta");
    g.omega = config.get_double("model.omega");
    g.sigma2 = config.get_double("model.sigma2");
    model.triggering = Triggering(g);
  } else if (family == "etas_power_law") {
    EtasPowerLaw e;
    e.k0 = config.get_double("model.k0");
    e.alpha = config.get_double("model.alpha", 0.0);
    e.c = config.get_double("model.c");
    e.p = config.get_double("model.p");
    e.d = config.get_double("model.d");
    e.q = config.get_double("model.q");
    e.m0 = config.get_double("model.m0", 0.0);
    model.triggering = Triggering(e);
  } else if (family == "histogram") {
    HistogramTriggering h;
    h.time_edges = config.get_doubles("model.hist_time_edges");
    h.radius_edges = config.get_doubles("model.hist_radius_edges");
    h.values = config.get_doubles("model.hist_values");
    model.triggering = Triggering(h);
  } else {
    throw ValidationError("config key 'model.triggering' must be one of "
                          "none, gaussian_exponential, etas_power_law, histogram");
  }
  model.uses_marks = config.get_bool("model.uses_marks", false);
  return model;
}

void model_to_config(Config& config, const IntensityModel& model) {
  if (const auto* c = model.background.as<ConstantBackground>()) {
    config.set("model.background", "constant");
    config.set_double("model.nu", c->nu);
  } else if (const auto* g = model.background.as<GridBackground>()) {
    config.set("model.background", "grid");
    config.set_double("model.grid_x_min", g->rect.x0);
    config.set_double("model.grid_x_max", g->rect.x1);
    config.set_double("model.grid_y_min", g->rect.y0);
    config.set_double("model.grid_y_max", g->rect.y1);
    config.set_size("model.grid_nx", g->nx);
    config.set_size("model.grid_ny", g->ny);
    config.set_doubles("model.grid_values", g->values);
  } else if (const auto* k = model.background.as<KdeBackground>()) {
    config.set("model.background", "kde");
    config.set("model.kde_file", "background_kde.csv");
    config.set_double("model.kde_time_norm", k->time_norm);
  }

  if (!model.triggering) {
    config.set("model.triggering", "none");
  } else if (const auto* g = model.triggering->as<GaussianExponential>()) {
    config.set("model.triggering", "gaussian_exponential");
    config.set_double("model.theta", g->theta);
    config.set_double("model.omega", g->omega);
    config.set_double("model.sigma2", g->sigma2);
  } else if (const auto* e = model.triggering->as<EtasPowerLaw>()) {
    config.set("model.triggering", "etas_power_law");
    config.set_double("model.k0", e->k0);
    config.set_double("model.alpha", e->alpha);
    config.set_double("model.c", e->c);
    config.set_double("model.p", e->p);
    config.set_double("model.d", e->d);
    config.set_double("model.q", e->q);
    config.set_double("model.m0", e->m0);
  } else if (const auto* h = model.triggering->as<HistogramTriggering>()) {
    config.set("model.triggering", "histogram");
    config.set_doubles("model.hist_time_edges", h->time_edges);
    config.set_doubles("model.hist_radius_edges", h->radius_edges);
    config.set_doubles("model.hist_values", h->values);
  }
  config.set_bool("model.uses_marks", model.uses_marks);
}

}  // namespace sepp
