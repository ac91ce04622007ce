#include "bellcal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "bellcal/bisection.hpp"
#include "bellcal/errors.hpp"

namespace bellcal {

namespace {

constexpr double kLambdaCeiling = 1048576.0;  // 2^20

double eta_from_ratio(double singles_over_doubles) { return 2.0 / (2.0 + singles_over_doubles); }

}  // namespace

void ExperimentRun::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw InputError(fmt::format("run {}: duration must be positive, got {}", run_id, duration_s));
  }
  if (bell_observed && !std::isfinite(*bell_observed)) {
    throw InputError(fmt::format("run {}: Bell value is not finite", run_id));
  }
}

void BellCertificate::validate() const {
  if (!(tsirelson_bound > 0.0)) {
    throw InputError(fmt::format("certificate '{}': Tsirelson bound must be positive", name));
  }
  if (!(classical_bound >= 0.0 && classical_bound < tsirelson_bound)) {
    throw InputError(fmt::format("certificate '{}': need 0 <= classical bound < Tsirelson bound", name));
  }
}

BellCertificate BellCertificate::chsh() { return {"CHSH", 2.0 * std::sqrt(2.0), 2.0, true}; }

double estimate_eta(std::span<const ExperimentRun> runs) {
  if (runs.empty()) throw CalibrationError("cannot estimate efficiency from an empty run list");
  double singles = 0.0;
  double doubles = 0.0;
  for (const auto& run : runs) {
    singles += static_cast<double>(run.singles_observed);
    doubles += static_cast<double>(run.doubles_observed);
  }
  if (doubles <= 0.0) throw CalibrationError("cannot estimate efficiency: total double clicks is zero");
  return eta_from_ratio(singles / doubles);
}

double estimate_eta_row_mean(std::span<const ExperimentRun> runs) {
  if (runs.empty()) throw CalibrationError("cannot estimate efficiency from an empty run list");
  double sum = 0.0;
  for (const auto& run : runs) {
    if (run.doubles_observed == 0) {
      throw CalibrationError(fmt::format("run {}: zero double clicks", run.run_id));
    }
    sum += eta_from_ratio(static_cast<double>(run.singles_observed) /
                          static_cast<double>(run.doubles_observed));
  }
  return sum / static_cast<double>(runs.size());
}

double solve_lambda_for_doubles(double doubles, double duration_s, double eta, double pulse_freq_hz,
                                const TruncationPolicy& policy, double tol) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw DomainError(fmt::format("lambda recovery needs eta in (0, 1], got {}", eta));
  }
  if (!(tol > 0.0)) throw DomainError("lambda tolerance must be positive");
  if (!(doubles >= 0.0) || !std::isfinite(doubles)) {
    throw DomainError(fmt::format("observed doubles must be finite and >= 0, got {}", doubles));
  }
  if (doubles == 0.0) return 0.0;

  const auto exceeds = [&](double lambda) {
    const SourceParams params{eta, lambda, pulse_freq_hz};
    return expected_doubles_count(params, duration_s, policy) >= doubles;
  };
  const auto hi = bracket_upward(exceeds, 1.0, kLambdaCeiling);
  if (!hi) {
    throw DivergenceError(fmt::format(
        "no lambda <= 2^20 reproduces {} doubles in {} s at eta = {}", doubles, duration_s, eta));
  }
  return bisect(exceeds, 0.0, *hi, tol).midpoint();
}

double solve_lambda_from_counts(const ExperimentRun& run, double eta, double pulse_freq_hz,
                                const TruncationPolicy& policy, double tol) {
  run.validate();
  return solve_lambda_for_doubles(static_cast<double>(run.doubles_observed), run.duration_s, eta,
                                  pulse_freq_hz, policy, tol);
}

LinearFit fit_linear(std::span<const LambdaPoint> points) {
  std::set<double> distinct;
  for (const auto& p : points) distinct.insert(p.lambda_mean);
  if (distinct.size() < 2) {
    throw DegenerateFitError(fmt::format(
        "linear fit needs at least 2 distinct lambda values, got {}", distinct.size()));
  }

  const auto n = static_cast<double>(points.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& p : points) {
    mean_x += p.lambda_mean;
    mean_y += p.bell;
  }
  mean_x /= n;
  mean_y /= n;

  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : points) {
    const double dx = p.lambda_mean - mean_x;
    sxx += dx * dx;
    sxy += dx * (p.bell - mean_y);
  }

  LinearFit fit;
  fit.slope_a = sxy / sxx;
  fit.intercept_b = mean_y - fit.slope_a * mean_x;
  double ss = 0.0;
  for (const auto& p : points) {
    const double r = p.bell - (fit.slope_a * p.lambda_mean + fit.intercept_b);
    ss += r * r;
  }
  fit.rmse = std::sqrt(ss / n);
  return fit;
}

PhysicalFit to_physical(double slope_a, double intercept_b, double eta, const BellCertificate& cert) {
  cert.validate();
  if (!cert.trace_zero) {
    throw ModelAssumptionError(fmt::format(
        "certificate '{}' is not trace-zero; the white-noise model only applies to correlator-based "
        "Bell operators",
        cert.name));
  }
  PhysicalFit fit;
  fit.slope_a = slope_a;
  fit.intercept_b = intercept_b;
  fit.eta_used = eta;
  fit.xi_used = xi(eta);
  fit.tsirelson_bound = cert.tsirelson_bound;
  fit.alpha = -2.0 * slope_a / (cert.tsirelson_bound * fit.xi_used);
  fit.beta = -2.0 * slope_a / fit.xi_used - intercept_b;
  return fit;
}

CalibrationReport calibrate(std::span<const ExperimentRun> runs, const BellCertificate& cert,
                            double pulse_freq_hz, const TruncationPolicy& policy, double tol) {
  std::vector<ExperimentRun> sorted(runs.begin(), runs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& l, const auto& r) { return l.run_id < r.run_id; });
  for (const auto& run : sorted) {
    run.validate();
    if (!run.bell_observed) {
      throw CalibrationError(fmt::format("run {}: missing observed Bell value", run.run_id));
    }
  }

  CalibrationReport report;
  report.eta_hat = estimate_eta(sorted);
  try {
    report.eta_row_mean = estimate_eta_row_mean(sorted);
  } catch (const CalibrationError&) {
    report.eta_row_mean = std::nan("");
  }

  std::vector<LambdaPoint> points;
  points.reserve(sorted.size());
  for (const auto& run : sorted) {
    double lambda = 0.0;
    try {
      lambda = solve_lambda_from_counts(run, report.eta_hat, pulse_freq_hz, policy, tol);
    } catch (const DivergenceError& e) {
      throw DivergenceError(fmt::format("run {}: {}", run.run_id, e.what()));
    }
    points.push_back({lambda, *run.bell_observed});
  }

  const LinearFit line = fit_linear(points);
  report.fit = to_physical(line.slope_a, line.intercept_b, report.eta_hat, cert);
  report.fit.rmse = line.rmse;

  report.per_run.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    report.per_run.push_back({sorted[i].run_id, points[i].lambda_mean,
                              line.slope_a * points[i].lambda_mean + line.intercept_b});
  }
  return report;
}

}  // namespace bellcal
