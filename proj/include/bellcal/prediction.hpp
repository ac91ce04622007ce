#pragma once

#include <span>
#include <vector>

#include "bellcal/calibration.hpp"
#include "bellcal/click_model.hpp"

namespace bellcal {

struct PredictionPoint {
  double lambda_mean{0.0};
  double visibility{1.0};
  double bell_value{0.0};
  double events_per_second{0.0};
};

/// Werner visibility v(η, λ) = rate(Entangled) / rate(Double); 1 at λ = 0.
double visibility(const SourceParams& params, const TruncationPolicy& policy = {});

/// Small-λ expansion 1 - (λ/2)·ξ(η).
double visibility_linearized(double eta, double lambda_mean);

/// Observed Bell value α·T·v(η, λ) - β.
double predict_bell(const PhysicalFit& fit, const SourceParams& params, const BellCertificate& cert,
                    const TruncationPolicy& policy = {});

/// Double clicks per second, f · rate(Double).
double events_per_second(const SourceParams& params, const TruncationPolicy& policy = {});

struct BellSolveOptions {
  double tol{1e-8};
  bool allow_below_classical{false};
};

/// λ at which predict_bell equals `target_bell`.
///
/// Feasible targets lie in [classical_bound, intercept_b]; targets below the
/// classical bound are accepted only with `allow_below_classical`.
double solve_lambda_for_bell(const PhysicalFit& fit, double target_bell, double eta,
                             const BellCertificate& cert, const TruncationPolicy& policy = {},
                             BellSolveOptions options = {});

/// λ at which events_per_second equals `rate_per_second`.
double solve_lambda_for_rate(double rate_per_second, double eta, double pulse_freq_hz,
                             const TruncationPolicy& policy = {}, double tol = 1e-10);

/// One PredictionPoint per grid value; the grid must be >= 0 and strictly increasing.
std::vector<PredictionPoint> sweep(const PhysicalFit& fit, double eta, const BellCertificate& cert,
                                   std::span<const double> lambda_grid,
                                   const TruncationPolicy& policy = {},
                                   double pulse_freq_hz = 8.0e7);

}  // namespace bellcal
