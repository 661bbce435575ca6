#pragma once

namespace sepp {

// Golden-section maximization over [lo, hi]. The interval shrinks by the
// golden ratio per iteration; 40 iterations reduce it by ~1e-8.
template <class F>
double golden_section_max(F&& f, double lo, double hi, int iters = 40) {
  const double ratio = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace sepp
