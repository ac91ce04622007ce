#include "bellcal/click_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "bellcal/errors.hpp"

namespace bellcal {

namespace {

void require_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw DomainError(fmt::format("efficiency must lie in [0, 1], got {}", eta));
  }
}

void require_pairs(std::int64_t k) {
  if (k < 1) {
    throw DomainError(fmt::format("click probabilities are defined for k >= 1 pairs, got {}", k));
  }
}

// (1 - eta)^n without cancellation for small eta.
double survival(double eta, double n) {
  if (eta == 1.0) return n == 0.0 ? 1.0 : 0.0;
  return std::exp(n * std::log1p(-eta));
}

}  // namespace

void SourceParams::validate() const {
  require_eta(eta);
  if (!(lambda_mean >= 0.0) || !std::isfinite(lambda_mean)) {
    throw DomainError(fmt::format("mean pairs per pulse must be finite and >= 0, got {}", lambda_mean));
  }
  if (!(pulse_freq_hz > 0.0) || !std::isfinite(pulse_freq_hz)) {
    throw DomainError(fmt::format("pulse frequency must be positive, got {}", pulse_freq_hz));
  }
}

std::string_view to_string(ClickKind kind) {
  switch (kind) {
    case ClickKind::Single: return "single";
    case ClickKind::Double: return "double";
    case ClickKind::Entangled: return "entangled";
  }
  return "unknown";
}

void TruncationPolicy::validate() const {
  if (!(tail_tolerance > 0.0 && tail_tolerance < 1.0)) {
    throw DomainError(fmt::format("tail tolerance must lie in (0, 1), got {}", tail_tolerance));
  }
  if (min_terms < 1) {
    throw DomainError(fmt::format("min_terms must be >= 1, got {}", min_terms));
  }
}

double poisson_pmf(std::int64_t k, double lambda_mean) {
  if (k < 0) throw DomainError(fmt::format("Poisson pmf needs k >= 0, got {}", k));
  if (!(lambda_mean >= 0.0)) {
    throw DomainError(fmt::format("Poisson pmf needs lambda >= 0, got {}", lambda_mean));
  }
  if (lambda_mean == 0.0) return k == 0 ? 1.0 : 0.0;
  const auto kd = static_cast<double>(k);
  const double log_p = kd * std::log(lambda_mean) - lambda_mean - std::lgamma(kd + 1.0);
  return std::clamp(std::exp(log_p), 0.0, 1.0);
}

double p_single(double eta, std::int64_t k) {
  require_eta(eta);
  require_pairs(k);
  if (eta == 0.0 || eta == 1.0) return 0.0;

  // One side sees nothing; the other side sees j >= 1 photons, all on the same detector.
  const auto kd = static_cast<double>(k);
  const double log_half_eta = std::log(0.5 * eta);
  const double log_miss = std::log1p(-eta);
  const double log_kfact = std::lgamma(kd + 1.0);
  double sum = 0.0;
  for (std::int64_t j = 1; j <= k; ++j) {
    const auto jd = static_cast<double>(j);
    const double log_binom = log_kfact - std::lgamma(jd + 1.0) - std::lgamma(kd - jd + 1.0);
    sum += std::exp(log_binom + jd * log_half_eta + (kd - jd) * log_miss);
  }
  return std::clamp(4.0 * survival(eta, kd) * sum, 0.0, 1.0);
}

double p_double(double eta, std::int64_t k) {
  require_eta(eta);
  require_pairs(k);
  const double one_side = (eta == 1.0) ? 1.0 : -std::expm1(static_cast<double>(k) * std::log1p(-eta));
  return one_side * one_side;
}

double p_ent(double eta, std::int64_t k) {
  require_eta(eta);
  require_pairs(k);
  const auto kd = static_cast<double>(k);
  return std::clamp(kd * eta * eta * survival(eta, 2.0 * (kd - 1.0)), 0.0, 1.0);
}

double click_probability(ClickKind kind, double eta, std::int64_t k) {
  switch (kind) {
    case ClickKind::Single: return p_single(eta, k);
    case ClickKind::Double: return p_double(eta, k);
    case ClickKind::Entangled: return p_ent(eta, k);
  }
  throw std::logic_error("unhandled click kind");
}

std::int64_t truncation_terms(double lambda_mean, const TruncationPolicy& policy) {
  policy.validate();
  if (!(lambda_mean >= 0.0)) throw DomainError("truncation needs lambda >= 0");
  // The tail bound is decreasing once K >= λ, and cannot be met below it.
  auto k_max = std::max<std::int64_t>(policy.min_terms, static_cast<std::int64_t>(std::floor(lambda_mean)));
  for (;; ++k_max) {
    const double ratio = lambda_mean / static_cast<double>(k_max + 2);
    if (ratio >= 1.0) continue;
    const double tail_bound = poisson_pmf(k_max + 1, lambda_mean) / (1.0 - ratio);
    if (tail_bound < policy.tail_tolerance) return k_max;
  }
}

double expected_rate(const SourceParams& params, ClickKind kind, const TruncationPolicy& policy) {
  params.validate();
  if (params.lambda_mean == 0.0) return 0.0;
  const std::int64_t k_max = truncation_terms(params.lambda_mean, policy);
  double rate = 0.0;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    const double weight = poisson_pmf(k, params.lambda_mean);
    if (weight == 0.0) continue;
    rate += weight * click_probability(kind, params.eta, k);
  }
  return std::clamp(rate, 0.0, 1.0);
}

namespace {

double expected_count(const SourceParams& params, ClickKind kind, double duration_s,
                      const TruncationPolicy& policy) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw DomainError(fmt::format("duration must be positive, got {}", duration_s));
  }
  return params.pulse_freq_hz * duration_s * expected_rate(params, kind, policy);
}

}  // namespace

double expected_singles_count(const SourceParams& params, double duration_s,
                              const TruncationPolicy& policy) {
  return expected_count(params, ClickKind::Single, duration_s, policy);
}

double expected_doubles_count(const SourceParams& params, double duration_s,
                              const TruncationPolicy& policy) {
  return expected_count(params, ClickKind::Double, duration_s, policy);
}

double xi(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw DomainError(fmt::format("xi(eta) needs eta in (0, 1], got {}", eta));
  }
  const double ratio = (p_double(eta, 2) - p_ent(eta, 2)) / (eta * eta);
  const double closed_form = 2.0 - eta * eta;
  if (std::abs(ratio - closed_form) > 1e-12) {
    throw std::logic_error(fmt::format("xi({}) ratio {} disagrees with 2 - eta^2 = {}", eta, ratio,
                                       closed_form));
  }
  return ratio;
}

}  // namespace bellcal
