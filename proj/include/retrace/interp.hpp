#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "retrace/errors.hpp"

namespace retrace {

// Cubic through four nodes in Newton form. Used for node slope estimates and
// for short extrapolation of smooth trace segments past their first sample.
class Cubic4 {
 public:
  Cubic4(const double* xs, const double* ys) {
    for (int i = 0; i < 4; ++i) x_[i] = xs[i];
    double d0[4] = {ys[0], ys[1], ys[2], ys[3]};
    c_[0] = d0[0];
    double d1[3], d2[2];
    for (int i = 0; i < 3; ++i) d1[i] = (d0[i + 1] - d0[i]) / (x_[i + 1] - x_[i]);
    c_[1] = d1[0];
    for (int i = 0; i < 2; ++i) d2[i] = (d1[i + 1] - d1[i]) / (x_[i + 2] - x_[i]);
    c_[2] = d2[0];
    c_[3] = (d2[1] - d2[0]) / (x_[3] - x_[0]);
  }

  double operator()(double x) const {
    return c_[0] +
           (x - x_[0]) * (c_[1] + (x - x_[1]) * (c_[2] + (x - x_[2]) * c_[3]));
  }

  double derivative(double x) const {
    const double a = x - x_[0], b = x - x_[1], c = x - x_[2];
    return c_[1] + c_[2] * (a + b) + c_[3] * (a * b + a * c + b * c);
  }

 private:
  double x_[4];
  double c_[4];
};

// Piecewise cubic Hermite interpolant on a strictly increasing grid. Node
// slopes come from local cubic fits (third-order accurate); the monotone
// variant applies a Fritsch-Carlson limiter so the interpolant never leaves
// the data range of an interval. Evaluation outside the grid clamps to the
// end values.
class CubicHermite {
 public:
  static CubicHermite fitted(std::vector<double> x, std::vector<double> y) {
    return CubicHermite(std::move(x), std::move(y), false);
  }
  static CubicHermite monotone(std::vector<double> x, std::vector<double> y) {
    return CubicHermite(std::move(x), std::move(y), true);
  }

  double operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const std::size_t k = interval(t);
    const double h = x_[k + 1] - x_[k];
    const double s = (t - x_[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] + h11 * h * d_[k + 1];
  }

  double derivative(double t) const {
    if (t <= x_.front()) return d_.front();
    if (t >= x_.back()) return d_.back();
    const std::size_t k = interval(t);
    const double h = x_[k + 1] - x_[k];
    const double s = (t - x_[k]) / h;
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * y_[k] + (3 * s2 - 4 * s + 1) * h * d_[k] +
            (-6 * s2 + 6 * s) * y_[k + 1] + (3 * s2 - 2 * s) * h * d_[k + 1]) /
           h;
  }

  const std::vector<double>& abscissae() const { return x_; }
  const std::vector<double>& ordinates() const { return y_; }
  const std::vector<double>& slopes() const { return d_; }

 private:
  CubicHermite(std::vector<double> x, std::vector<double> y, bool limit)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      raise(errc::config_invalid, "interpolation needs at least two nodes");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i] < x_[i + 1]))
        raise(errc::config_invalid, "interpolation grid must be strictly increasing");
    d_.resize(n);
    if (n == 2) {
      d_[0] = d_[1] = (y_[1] - y_[0]) / (x_[1] - x_[0]);
    } else if (n == 3) {
      for (std::size_t i = 0; i < 3; ++i) d_[i] = quadratic_slope(i);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s =
            std::min(n - 4, static_cast<std::size_t>(std::max<long>(0, static_cast<long>(i) - 1)));
        const Cubic4 fit(&x_[s], &y_[s]);
        d_[i] = fit.derivative(x_[i]);
      }
    }
    if (limit) apply_limiter();
  }

  double quadratic_slope(std::size_t i) const {
    const double x0 = x_[0], x1 = x_[1], x2 = x_[2];
    const double y0 = y_[0], y1 = y_[1], y2 = y_[2];
    const double t = x_[i];
    // derivative of the Lagrange parabola through the three nodes
    return y0 * (2 * t - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
           y1 * (2 * t - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
           y2 * (2 * t - x0 - x1) / ((x2 - x0) * (x2 - x1));
  }

  // Fritsch-Carlson conditions: zero slope at data extrema, magnitude capped
  // at three times the smaller adjacent secant. Keeps the interpolant inside
  // each interval's data range (in particular, nonnegative data stays
  // nonnegative) while leaving smooth strictly monotone stretches untouched.
  void apply_limiter() {
    const std::size_t n = x_.size();
    std::vector<double> sec(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) sec[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i == 0 ? sec[0] : sec[i - 1];
      const double right = i + 1 == n ? sec[n - 2] : sec[i];
      if (left * right <= 0.0 && i > 0 && i + 1 < n) {
        d_[i] = 0.0;
        continue;
      }
      const double cap = 3.0 * std::min(std::abs(left), std::abs(right));
      const double sign = (left + right) >= 0.0 ? 1.0 : -1.0;
      if (d_[i] * sign < 0.0)
        d_[i] = 0.0;
      else
        d_[i] = sign * std::min(std::abs(d_[i]), cap);
    }
  }

  std::size_t interval(double t) const {
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - x_.begin());
    return std::min(x_.size() - 2, k == 0 ? 0 : k - 1);
  }

  std::vector<double> x_, y_, d_;
};

// Smallest t in [lo, hi] with f(t) >= target, assuming f is non-decreasing
// there; plain bisection to the given absolute tolerance.
template <class F>
double bisect_leftmost(F&& f, double lo, double hi, double target, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= target)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace retrace
