#pragma once

#include <cstdint>
#include <string_view>

namespace bellcal {

/// Source and detection parameters shared by every rate computation.
struct SourceParams {
  double eta{0.0};             ///< per-photon detection efficiency in [0, 1]
  double lambda_mean{0.0};     ///< mean entangled pairs per pulse, >= 0
  double pulse_freq_hz{8.0e7}; ///< laser repetition rate

  /// Throws DomainError when any field violates its range.
  void validate() const;
};

enum class ClickKind { Single, Double, Entangled };

std::string_view to_string(ClickKind kind);

/// Controls where the infinite Poisson sum over pair numbers is cut.
struct TruncationPolicy {
  double tail_tolerance{1e-12};
  int min_terms{20};

  void validate() const;
};

/// λ^k e^{-λ} / k!, evaluated in log space.
double poisson_pmf(std::int64_t k, double lambda_mean);

/// Probability that exactly one of the four detectors fires, given k emitted pairs.
double p_single(double eta, std::int64_t k);

/// Probability that at least one detector fires on each side, given k emitted pairs.
double p_double(double eta, std::int64_t k);

/// Probability that exactly one photon is seen per side and both come from the same pair.
double p_ent(double eta, std::int64_t k);

double click_probability(ClickKind kind, double eta, std::int64_t k);

/// Largest pair number K included in the Poisson average for this λ and policy.
///
/// K is the smallest integer >= min_terms for which the geometric bound
/// pmf(K+1) / (1 - λ/(K+2)) on the tail mass P(k > K) drops below
/// tail_tolerance. Since every click probability is <= 1, the truncation
/// error of expected_rate is bounded by the same quantity.
std::int64_t truncation_terms(double lambda_mean, const TruncationPolicy& policy);

/// Poisson-averaged click probability per pulse, summed over k = 1..K.
double expected_rate(const SourceParams& params, ClickKind kind,
                     const TruncationPolicy& policy = {});

/// f · t · rate(Single).
double expected_singles_count(const SourceParams& params, double duration_s,
                              const TruncationPolicy& policy = {});

/// f · t · rate(Double).
double expected_doubles_count(const SourceParams& params, double duration_s,
                              const TruncationPolicy& policy = {});

/// First-order visibility slope factor (P_double(η,2) - P_ent(η,2)) / η².
///
/// Evaluated from the click probabilities and cross-checked against the
/// closed form 2 - η²; a disagreement beyond 1e-12 throws std::logic_error.
double xi(double eta);

}  // namespace bellcal
