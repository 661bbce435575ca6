#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sepp/geometry.hpp"
#include "sepp/rng.hpp"

namespace sepp {

// ----------------------------------------------------------------------
// Triggering families. A triggering function g(ds, dt [, parent mark]) is
// zero for dt <= 0 and integrates over R^2 x [0, inf) to the mean number
// of offspring per event.
// ----------------------------------------------------------------------

// Gaussian kernel in space, exponential decay in time:
//   g(s, t) = theta / (2 pi omega sigma2) * exp(-t/omega) * exp(-|s|^2/(2 sigma2))
// Total mass is exactly theta.
struct GaussianExponential {
  double theta = 0.5;   // offspring weight per event
  double omega = 1.0;   // temporal decay scale
  double sigma2 = 0.01; // spatial variance
};

// Modified Omori decay in time with a normalized power-law kernel in space:
//   g(s, t; M) = k0 e^{alpha (M - m0)} (t + c)^{-p}
//                * (q - 1) / (pi d) * (1 + |s|^2/d)^{-q}
// The spatial factor integrates to 1 over R^2; the total mass is
// k0 e^{alpha (M - m0)} c^{1-p} / (p - 1).
struct EtasPowerLaw {
  double k0 = 0.1;
  double alpha = 0.0;
  double c = 0.01;
  double p = 1.5;   // > 1
  double d = 0.01;
  double q = 2.0;   // > 1
  double m0 = 0.0;  // minimum magnitude
};

// Nonparametric rate, piecewise constant over time bins x radial annuli.
// values is row-major (time bin index major), one rate per cell; the
// function is zero beyond the last edges.
struct HistogramTriggering {
  std::vector<double> time_edges;    // ascending, first >= 0
  std::vector<double> radius_edges;  // ascending, first >= 0
  std::vector<double> values;        // (time bins) x (radius bins)

  std::size_t time_bins() const { return time_edges.size() - 1; }
  std::size_t radius_bins() const { return radius_edges.size() - 1; }
  double cell_measure(std::size_t ti, std::size_t ri) const;
};

struct TriggeringOffset {
  double dt = 0.0;
  Vec2 ds;
};

class Triggering {
 public:
  using Family = std::variant<GaussianExponential, EtasPowerLaw, HistogramTriggering>;

  explicit Triggering(Family family);

  double eval(Vec2 ds, double dt,
              std::optional<double> parent_mark = std::nullopt) const;

  // Total mass m = integral of g over R^2 x [0, inf).
  double mass(std::optional<double> parent_mark = std::nullopt) const;

  // Integral of g over R^2 x [0, tau].
  double temporal_mass(double tau,
                       std::optional<double> parent_mark = std::nullopt) const;

  // nu_j(t): integral of g over R^2 at fixed lag.
  double temporal_marginal(double dt,
                           std::optional<double> parent_mark = std::nullopt) const;

  // Upper bound of temporal_marginal over all lags >= dt.
  double temporal_marginal_bound(
      double dt, std::optional<double> parent_mark = std::nullopt) const;

  // Draws (dt, ds) from g normalized as a probability density.
  TriggeringOffset sample_offset(
      Rng& rng, std::optional<double> parent_mark = std::nullopt) const;

  // Lag beyond which the remaining mass fraction is < tail, when the
  // family has an infinite-support tail that admits such a cutoff.
  std::optional<double> cutoff_for_tail_mass(double tail) const;

  // Characteristic scales used for default simulation padding.
  double temporal_scale() const;
  double spatial_scale() const;

  const Family& family() const { return family_; }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&family_);
  }

 private:
  Family family_;
};

// ----------------------------------------------------------------------
// Background models: rate per unit area and time, constant in time.
// ----------------------------------------------------------------------

struct ConstantBackground {
  double nu = 1.0;
};

// Weighted Gaussian kernel density over fixed support points:
//   mu(s) = sum_i w_i / (2 pi h_i^2 T) exp(-|s - s_i|^2 / (2 h_i^2))
struct KdeBackground {
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::vector<double> bandwidths;  // per point
  double time_norm = 1.0;          // T
};

// Piecewise-constant field over a rectangular grid; zero outside.
struct GridBackground {
  Rect rect;
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::vector<double> values;  // row-major, y major

  double value_at(Vec2 s) const;
};

class Background {
 public:
  using Model = std::variant<ConstantBackground, KdeBackground, GridBackground>;

  explicit Background(Model model);

  double eval(Vec2 s) const;

  // Integral of mu over the rectangle (per unit time). Exact for all models.
  double integral_over_rect(const Rect& rect) const;

  // Integral of mu over the region (per unit time). Exact for rectangles
  // and for grid/constant models; KDE over a polygon uses a fine midpoint
  // grid on the bounding box.
  double integral_over_region(const SpatialRegion& region) const;

  // Rigorous upper bound of mu over the rectangle.
  double sup_bound(const Rect& rect) const;

  const Model& model() const { return model_; }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&model_);
  }

 private:
  Model model_;
};

// ----------------------------------------------------------------------
// Full conditional-intensity model lambda(s,t) = mu(s) + sum g.
// ----------------------------------------------------------------------

struct IntensityModel {
  Background background{ConstantBackground{}};
  std::optional<Triggering> triggering;
  bool uses_marks = false;
};

// Integral of the unit-mass 1-D Gaussian with the given center and sd
// over [lo, hi].
double normal_cdf_diff(double lo, double hi, double center, double sd);

// Flat parameter vector of the free parameters (constant-background rate
// plus the triggering family parameters; KDE/grid backgrounds and the ETAS
// reference magnitude are structural and excluded).
std::vector<double> model_parameters(const IntensityModel& model);
std::vector<std::string> model_parameter_names(const IntensityModel& model);
IntensityModel with_parameters(const IntensityModel& model,
                               const std::vector<double>& params);

}  // namespace sepp
