#include "bellcal/prediction.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bellcal/bisection.hpp"
#include "bellcal/errors.hpp"

namespace bellcal {

namespace {

constexpr double kLambdaCeiling = 1048576.0;  // 2^20

void check_certificate(const PhysicalFit& fit, const BellCertificate& cert) {
  cert.validate();
  if (!cert.trace_zero) {
    throw ModelAssumptionError(fmt::format("certificate '{}' is not trace-zero", cert.name));
  }
  const double scale = std::max(std::abs(fit.tsirelson_bound), std::abs(cert.tsirelson_bound));
  if (std::abs(fit.tsirelson_bound - cert.tsirelson_bound) > 1e-12 * scale) {
    throw ModelAssumptionError(fmt::format(
        "fit was produced for Tsirelson bound {} but certificate '{}' has {}", fit.tsirelson_bound,
        cert.name, cert.tsirelson_bound));
  }
}

}  // namespace

double visibility(const SourceParams& params, const TruncationPolicy& policy) {
  params.validate();
  if (params.eta == 0.0) throw DomainError("visibility is undefined at eta = 0");
  if (params.lambda_mean == 0.0) return 1.0;
  const double doubles = expected_rate(params, ClickKind::Double, policy);
  if (doubles == 0.0) return 1.0;  // λ below the smallest representable rate: k = 1 limit
  const double entangled = expected_rate(params, ClickKind::Entangled, policy);
  return std::clamp(entangled / doubles, 0.0, 1.0);
}

double visibility_linearized(double eta, double lambda_mean) {
  if (!(lambda_mean >= 0.0)) throw DomainError("visibility_linearized needs lambda >= 0");
  return 1.0 - 0.5 * lambda_mean * xi(eta);
}

double predict_bell(const PhysicalFit& fit, const SourceParams& params, const BellCertificate& cert,
                    const TruncationPolicy& policy) {
  check_certificate(fit, cert);
  return fit.alpha * cert.tsirelson_bound * visibility(params, policy) - fit.beta;
}

double events_per_second(const SourceParams& params, const TruncationPolicy& policy) {
  return params.pulse_freq_hz * expected_rate(params, ClickKind::Double, policy);
}

double solve_lambda_for_bell(const PhysicalFit& fit, double target_bell, double eta,
                             const BellCertificate& cert, const TruncationPolicy& policy,
                             BellSolveOptions options) {
  check_certificate(fit, cert);
  if (!(options.tol > 0.0)) throw DomainError("Bell solve tolerance must be positive");
  if (!std::isfinite(target_bell)) throw InfeasibleTargetError("target Bell value is not finite");
  if (target_bell > fit.intercept_b) {
    throw InfeasibleTargetError(fmt::format(
        "target {} exceeds the zero-noise Bell value {}", target_bell, fit.intercept_b));
  }
  if (target_bell < cert.classical_bound && !options.allow_below_classical) {
    throw InfeasibleTargetError(fmt::format("target {} is below the classical bound {} of '{}'",
                                            target_bell, cert.classical_bound, cert.name));
  }
  if (target_bell == fit.intercept_b) return 0.0;

  const auto at_or_below = [&](double lambda) {
    return predict_bell(fit, {eta, lambda, 8.0e7}, cert, policy) <= target_bell;
  };
  const auto hi = bracket_upward(at_or_below, 1.0, kLambdaCeiling);
  if (!hi) {
    throw DivergenceError(fmt::format("no lambda <= 2^20 brings the Bell value down to {}", target_bell));
  }
  return bisect(at_or_below, 0.0, *hi, options.tol).midpoint();
}

double solve_lambda_for_rate(double rate_per_second, double eta, double pulse_freq_hz,
                             const TruncationPolicy& policy, double tol) {
  if (!(rate_per_second >= 0.0) || !std::isfinite(rate_per_second)) {
    throw InputError(fmt::format("event rate must be finite and >= 0, got {}", rate_per_second));
  }
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("rate inversion needs eta in (0, 1]");
  if (rate_per_second == 0.0) return 0.0;
  if (rate_per_second >= pulse_freq_hz) {
    throw InfeasibleTargetError(fmt::format(
        "event rate {} /s is not below the pulse frequency {} Hz", rate_per_second, pulse_freq_hz));
  }
  const auto reaches = [&](double lambda) {
    return events_per_second({eta, lambda, pulse_freq_hz}, policy) >= rate_per_second;
  };
  const auto hi = bracket_upward(reaches, 1.0, kLambdaCeiling);
  if (!hi) {
    throw DivergenceError(fmt::format("no lambda <= 2^20 reaches {} events/s", rate_per_second));
  }
  return bisect(reaches, 0.0, *hi, tol).midpoint();
}

std::vector<PredictionPoint> sweep(const PhysicalFit& fit, double eta, const BellCertificate& cert,
                                   std::span<const double> lambda_grid,
                                   const TruncationPolicy& policy, double pulse_freq_hz) {
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0) || !std::isfinite(lambda_grid[i])) {
      throw InputError(fmt::format("sweep grid value {} at index {} is not a finite value >= 0",
                                   lambda_grid[i], i));
    }
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
      throw InputError(fmt::format("sweep grid is not strictly increasing at index {}", i));
    }
  }
  std::vector<PredictionPoint> points;
  points.reserve(lambda_grid.size());
  for (const double lambda : lambda_grid) {
    const SourceParams params{eta, lambda, pulse_freq_hz};
    points.push_back({lambda, visibility(params, policy), predict_bell(fit, params, cert, policy),
                      events_per_second(params, policy)});
  }
  return points;
}

}  // namespace bellcal
