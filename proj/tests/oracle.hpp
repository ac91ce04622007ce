#pragma once

// Reference computations for the test suites. Nothing here calls into the library.

#include <cmath>
#include <cstdint>
#include <functional>

namespace bellcal::oracle {

/// λ^k e^{-λ} / k! by direct multiplication; fine for k <= ~150.
inline double poisson_pmf(int k, double lambda) {
  double p = std::exp(-lambda);
  for (int i = 1; i <= k; ++i) p *= lambda / i;
  return p;
}

struct Enumerated {
  double single{0.0};
  double dbl{0.0};
  double ent{0.0};
};

/// Exhaustive enumeration of every photon's fate (lost, detector +, detector -)
/// for k pairs: 9^k joint configurations.
inline Enumerated enumerate_clicks(double eta, int k) {
  const double fate_prob[3] = {1.0 - eta, 0.5 * eta, 0.5 * eta};
  Enumerated out;
  std::int64_t configs = 1;
  for (int i = 0; i < 2 * k; ++i) configs *= 3;
  for (std::int64_t c = 0; c < configs; ++c) {
    std::int64_t code = c;
    double prob = 1.0;
    unsigned amask = 0, bmask = 0;
    int ahits = 0, bhits = 0, apair = -1, bpair = -1;
    for (int pair = 0; pair < k; ++pair) {
      const int a = static_cast<int>(code % 3);
      code /= 3;
      const int b = static_cast<int>(code % 3);
      code /= 3;
      prob *= fate_prob[a] * fate_prob[b];
      if (a) { amask |= 1u << (a - 1); ++ahits; apair = pair; }
      if (b) { bmask |= 1u << (b - 1); ++bhits; bpair = pair; }
    }
    const int fired = __builtin_popcount(amask) + __builtin_popcount(bmask);
    if (fired == 1) out.single += prob;
    if (amask && bmask) out.dbl += prob;
    if (ahits == 1 && bhits == 1 && apair == bpair) out.ent += prob;
  }
  return out;
}

// Closed forms obtained by summing the binomial series by hand.
inline double single_closed(double eta, int k) {
  return 4.0 * std::pow(1.0 - eta, k) * (std::pow(1.0 - 0.5 * eta, k) - std::pow(1.0 - eta, k));
}
inline double double_closed(double eta, int k) {
  const double s = 1.0 - std::pow(1.0 - eta, k);
  return s * s;
}
inline double ent_closed(double eta, int k) { return k * eta * eta * std::pow(1.0 - eta, 2 * (k - 1)); }

/// Brute-force Poisson average over k = 1..k_max.
inline double rate(double eta, double lambda, const std::function<double(double, int)>& prob, int k_max = 50) {
  double sum = 0.0;
  for (int k = 1; k <= k_max; ++k) sum += poisson_pmf(k, lambda) * prob(eta, k);
  return sum;
}

}  // namespace bellcal::oracle
