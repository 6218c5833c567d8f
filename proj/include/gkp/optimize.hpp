#pragma once

#include <functional>
#include <string>

namespace gkp {

struct ScalarMinimum {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
  bool grid_fallback = false;
  std::string diagnostic;
};

// Golden-section search on [lo, hi] to absolute tolerance `tol`. If the
// interior does not bracket a minimum (or the search ends above an endpoint),
// scans `grid_points` equally spaced points and refines around the best one.
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol,
                                      int grid_points = 200);

}  // namespace gkp
