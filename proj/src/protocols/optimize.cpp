#include "gkp/optimize.hpp"

#include <cmath>
#include <sstream>

#include "gkp/error.hpp"

namespace gkp {

namespace {

const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;

struct Counted {
  const std::function<double(double)>& f;
  int calls = 0;
  double operator()(double x) {
    ++calls;
    const double v = f(x);
    require(!std::isnan(v), ErrorCode::numeric_failure, "objective returned NaN");
    return v;
  }
};

// Plain golden-section loop on a bracket whose interior points are given.
void golden_loop(Counted& f, double& a, double& b, double tol, double& best_x, double& best_f) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  if (fc < fd) {
    best_x = c;
    best_f = fc;
  } else {
    best_x = d;
    best_f = fd;
  }
}

}  // namespace

ScalarMinimum golden_section_minimize(const std::function<double(double)>& fn, double lo, double hi, double tol,
                                      int grid_points) {
  require(lo < hi && std::isfinite(lo) && std::isfinite(hi), ErrorCode::invalid_parameters, "bad search interval");
  require(tol > 0, ErrorCode::invalid_parameters, "tolerance must be positive");
  require(grid_points >= 3, ErrorCode::invalid_parameters, "grid fallback needs at least 3 points");
  Counted f{fn};
  ScalarMinimum out;

  const double flo = f(lo), fhi = f(hi);
  double a = lo, b = hi;
  // Bracket check: an interior golden point must undercut both endpoints.
  const double c0 = b - kInvPhi * (b - a), d0 = a + kInvPhi * (b - a);
  const double fc0 = f(c0), fd0 = f(d0);
  bool bracketed = std::min(fc0, fd0) < std::min(flo, fhi);
  if (bracketed) {
    golden_loop(f, a, b, tol, out.x, out.fx);
    bracketed = out.fx <= std::min(flo, fhi);
  }
  if (!bracketed) {
    std::ostringstream os;
    os << "golden-section bracket failure on [" << lo << ", " << hi << "]; fell back to " << grid_points
       << "-point grid scan";
    out.grid_fallback = true;
    double best_x = lo, best_f = flo;
    const double h = (hi - lo) / (grid_points - 1);
    for (int i = 1; i < grid_points; ++i) {
      const double x = lo + i * h;
      const double v = (i == grid_points - 1) ? fhi : f(x);
      if (v < best_f) {
        best_f = v;
        best_x = x;
      }
    }
    double ra = std::max(lo, best_x - h), rb = std::min(hi, best_x + h);
    double rx = best_x, rf = best_f;
    golden_loop(f, ra, rb, tol, rx, rf);
    if (rf < best_f) {
      best_x = rx;
      best_f = rf;
    }
    out.x = best_x;
    out.fx = best_f;
    os << "; minimum at " << out.x;
    out.diagnostic = os.str();
  }
  out.evaluations = f.calls;
  return out;
}

}  // namespace gkp
