#pragma once

#include <cmath>
#include <concepts>
#include <optional>

namespace bellcal {

struct BisectionResult {
  double lo{0.0};
  double hi{0.0};
  int iterations{0};

  double midpoint() const { return 0.5 * (lo + hi); }
};

/// Bisects a bracket [lo, hi] on which `above(x)` flips from false to true.
///
/// `above` must be monotone: false on [lo, root) and true on [root, hi].
/// Iterates until hi - lo < tol or the midpoint stops moving in floating point.
template <std::predicate<double> Above>
BisectionResult bisect(Above&& above, double lo, double hi, double tol) {
  BisectionResult r{lo, hi, 0};
  while (r.hi - r.lo >= tol) {
    const double mid = r.midpoint();
    if (mid <= r.lo || mid >= r.hi) break;
    if (above(mid)) {
      r.hi = mid;
    } else {
      r.lo = mid;
    }
    ++r.iterations;
  }
  return r;
}

/// Grows the upper end of [0, start] by doubling until `above(hi)` holds.
///
/// Returns the first hi with above(hi) true, or nullopt once hi would exceed `ceiling`.
template <std::predicate<double> Above>
std::optional<double> bracket_upward(Above&& above, double start, double ceiling) {
  for (double hi = start; hi <= ceiling; hi *= 2.0) {
    if (above(hi)) return hi;
  }
  return std::nullopt;
}

}  // namespace bellcal
