#include "sepp/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
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

double parse_double(const std::string& field, std::size_t row, const char* name) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size())
      throw ValidationError("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("malformed " + std::string(name) + " value '" + field +
                          "' in row " + std::to_string(row));
  }
}

}  // namespace

EventCatalog EventCatalog::from_events(std::vector<Event> events,
                                       const ObservationDomain& domain,
                                       OutsidePolicy policy, LoadReport* report) {
  const bool any_marks =
      std::any_of(events.begin(), events.end(),
                  [](const Event& e) { return e.mark.has_value(); });
  std::vector<Event> kept;
  kept.reserve(events.size());
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!std::isfinite(e.t) || !std::isfinite(e.x) || !std::isfinite(e.y))
      throw ValidationError("non-finite event in row " + std::to_string(i + 1));
    if (e.t < 0.0)
      throw ValidationError("negative time in row " + std::to_string(i + 1));
    if (any_marks != e.mark.has_value())
      throw ValidationError("inconsistent mark column in row " +
                            std::to_string(i + 1));
    const bool inside = e.t < domain.t_end && domain.contains(e.location());
    if (!inside) {
      if (policy == OutsidePolicy::error)
        throw ValidationError("event outside observation domain in row " +
                              std::to_string(i + 1));
      ++dropped;
      continue;
    }
    kept.push_back(e);
  }

  // Stable order by (t, x, y, input row index); ties in all coordinates
  // keep their input order.
  std::stable_sort(kept.begin(), kept.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });

  if (report != nullptr) report->dropped_outside = dropped;
  EventCatalog catalog;
  catalog.events_ = std::move(kept);
  catalog.has_marks_ = any_marks;
  return catalog;
}

std::size_t EventCatalog::lower_bound_time(double t) const {
  const auto it = std::lower_bound(
      events_.begin(), events_.end(), t,
      [](const Event& e, double value) { return e.t < value; });
  return static_cast<std::size_t>(it - events_.begin());
}

EventCatalog load_catalog(const std::string& path, const ObservationDomain& domain,
                          OutsidePolicy policy, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open catalog file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("empty catalog file: " + path);
  const std::string header = trim(line);
  bool with_mark = false;
  if (header == "t,x,y") {
    with_mark = false;
  } else if (header == "t,x,y,mark") {
    with_mark = true;
  } else {
    throw ValidationError("unexpected catalog header '" + header +
                          "' (want t,x,y[,mark])");
  }

  std::vector<Event> events;
  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    const std::string body = trim(line);
    if (body.empty()) continue;
    std::stringstream ss(body);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    const std::size_t expected = with_mark ? 4 : 3;
    if (fields.size() != expected)
      throw ValidationError("row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, want " +
                            std::to_string(expected));
    Event e;
    e.t = parse_double(fields[0], row, "t");
    e.x = parse_double(fields[1], row, "x");
    e.y = parse_double(fields[2], row, "y");
    if (with_mark) {
      const double m = parse_double(fields[3], row, "mark");
      if (m < 0.0)
        throw ValidationError("negative mark in row " + std::to_string(row));
      e.mark = m;
    }
    events.push_back(e);
  }
  if (events.empty()) throw ValidationError("empty catalog: " + path);
  if (report != nullptr) report->rows_read = events.size();

  try {
    return EventCatalog::from_events(std::move(events), domain, policy, report);
  } catch (const ValidationError& err) {
    throw ValidationError(std::string(err.what()) + " (file " + path + ")");
  }
}

void save_catalog(const std::string& path, const EventCatalog& catalog) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write catalog file: " + path);
  out << (catalog.has_marks() ? "t,x,y,mark\n" : "t,x,y\n");
  char buf[160];
  for (const Event& e : catalog) {
    if (catalog.has_marks()) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", e.t, e.x, e.y,
                    *e.mark);
    } else {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", e.t, e.x, e.y);
    }
    out << buf;
  }
}

}  // namespace sepp
