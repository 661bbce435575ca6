#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sepp/geometry.hpp"

namespace sepp {

struct Event {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> mark;

  Vec2 location() const { return {x, y}; }
};

// Policy for events outside the observation domain at load time.
enum class OutsidePolicy { error, drop };

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t dropped_outside = 0;
};

// Ordered event catalog. Events are strictly sorted by (t, x, y, input
// order); simultaneous events are legal and ordered deterministically.
class EventCatalog {
 public:
  EventCatalog() = default;

  // Validates (finite coordinates, t >= 0), applies the outside policy
  // against the domain, and sorts.
  static EventCatalog from_events(std::vector<Event> events,
                                  const ObservationDomain& domain,
                                  OutsidePolicy policy = OutsidePolicy::error,
                                  LoadReport* report = nullptr);

  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }
  const std::vector<Event>& events() const { return events_; }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }
  bool has_marks() const { return has_marks_; }

  // Index of the first event with time >= t (events before it are the
  // strict history of t).
  std::size_t lower_bound_time(double t) const;

 private:
  std::vector<Event> events_;
  bool has_marks_ = false;
};

// CSV with header `t,x,y` or `t,x,y,mark`; decimal floats.
EventCatalog load_catalog(const std::string& path, const ObservationDomain& domain,
                          OutsidePolicy policy = OutsidePolicy::error,
                          LoadReport* report = nullptr);

void save_catalog(const std::string& path, const EventCatalog& catalog);

}  // namespace sepp
