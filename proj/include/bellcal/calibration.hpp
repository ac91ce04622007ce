#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bellcal/click_model.hpp"

namespace bellcal {

/// One measurement campaign at a fixed pump setting.
struct ExperimentRun {
  std::int64_t run_id{0};
  std::uint64_t doubles_observed{0};
  std::uint64_t singles_observed{0};
  double duration_s{0.0};
  std::optional<double> bell_observed;

  void validate() const;
};

/// A correlator-based Bell expression and its bounds.
struct BellCertificate {
  std::string name;
  double tsirelson_bound{0.0};
  double classical_bound{0.0};
  bool trace_zero{true};

  void validate() const;

  static BellCertificate chsh();
};

struct LinearFit {
  double slope_a{0.0};
  double intercept_b{0.0};
  double rmse{0.0};
};

/// Linear coefficients plus the state-preparation / measurement parameters they imply.
struct PhysicalFit {
  double slope_a{0.0};
  double intercept_b{0.0};
  double rmse{0.0};
  double eta_used{0.0};
  double xi_used{0.0};
  double tsirelson_bound{0.0};
  double alpha{0.0};  ///< state-preparation degradation
  double beta{0.0};   ///< additive measurement offset, Bell units
};

struct RunCalibration {
  std::int64_t run_id{0};
  double lambda_calc{0.0};
  double bell_linear_fit{0.0};
};

struct CalibrationReport {
  double eta_hat{0.0};
  double eta_row_mean{0.0};  ///< diagnostic: per-run estimates averaged instead of pooled
  std::vector<RunCalibration> per_run;
  PhysicalFit fit;
};

struct LambdaPoint {
  double lambda_mean{0.0};
  double bell{0.0};
};

/// Pooled first-order efficiency estimate 2 / (2 + Σs / Σc).
double estimate_eta(std::span<const ExperimentRun> runs);

/// The same estimator applied per run and averaged. Diagnostic only.
double estimate_eta_row_mean(std::span<const ExperimentRun> runs);

/// λ at which the expected doubles count over `duration_s` equals `doubles`.
///
/// Brackets from [0, 1] by doubling (up to 2^20), then bisects to |Δλ| < tol.
double solve_lambda_for_doubles(double doubles, double duration_s, double eta, double pulse_freq_hz,
                                const TruncationPolicy& policy = {}, double tol = 1e-10);

double solve_lambda_from_counts(const ExperimentRun& run, double eta, double pulse_freq_hz,
                                const TruncationPolicy& policy = {}, double tol = 1e-10);

/// Ordinary least squares B = a·λ + b; RMSE uses divisor n.
LinearFit fit_linear(std::span<const LambdaPoint> points);

PhysicalFit to_physical(double slope_a, double intercept_b, double eta, const BellCertificate& cert);

/// Full pipeline: η̂, per-run λ, linear fit, physical parameters.
CalibrationReport calibrate(std::span<const ExperimentRun> runs, const BellCertificate& cert,
                            double pulse_freq_hz = 8.0e7, const TruncationPolicy& policy = {},
                            double tol = 1e-10);

}  // namespace bellcal
