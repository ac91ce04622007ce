#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "bellcal/click_model.hpp"

namespace bellcal::mc {

/// Per-pulse click classification counts.
struct PulseTally {
  std::uint64_t pulses{0};
  std::uint64_t singles{0};
  std::uint64_t doubles{0};
  std::uint64_t entangled_coincidences{0};

  PulseTally& operator+=(const PulseTally& other);
  friend bool operator==(const PulseTally&, const PulseTally&) = default;
};

/// Simulation size and seeding.
///
/// Output is a pure function of (params, n_pulses, seed, block_size). Pulses
/// are split into consecutive blocks of `block_size`; block i draws from a
/// std::mt19937_64 seeded with std::seed_seq{seed_lo, seed_hi, i_lo, i_hi}
/// (32-bit halves). Both engine and seed_seq are fully specified by the C++
/// standard, and uniforms are formed as (x >> 11) * 2^-53, so the mapping does
/// not depend on the standard library implementation. `threads` only changes
/// wall time.
struct SimConfig {
  std::uint64_t n_pulses{10'000'000};
  std::uint64_t seed{42};
  std::uint64_t block_size{1u << 16};
  unsigned threads{0};  ///< 0 = hardware concurrency

  void validate() const;
};

/// Engine for block `block_index` of a run with `seed`.
std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block_index);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double uniform01(std::mt19937_64& engine);

/// Poisson variate by sequential inversion; λ >= 10 is split into equal parts below 10.
std::uint64_t sample_poisson(double lambda_mean, std::mt19937_64& engine);

PulseTally simulate_pulses(const SourceParams& params, const SimConfig& cfg);

struct ChshEstimate {
  PulseTally tally;
  std::array<std::array<std::uint64_t, 2>, 2> coincidences{};  ///< per setting pair (x, y)
  std::array<std::array<std::int64_t, 2>, 2> product_sums{};   ///< Σ a·b per setting pair
  std::array<std::array<double, 2>, 2> correlators{};
  double value{0.0};      ///< E00 + E01 + E10 - E11; NaN if a setting pair saw no events
  double std_error{0.0};  ///< sqrt(Σ (1 - E²) / n_xy)
};

/// Ideal CHSH correlator at the Tsirelson point: +1/√2, except -1/√2 for (1, 1).
double ideal_chsh_correlator(int x, int y);

/// Empirical CHSH value over double-click events.
///
/// Entangled coincidences draw outcomes from P(a, b | x, y) = (1 + a·b·E) / 4
/// with E = state_visibility · ideal correlator; every other double click is
/// an accidental and draws independent uniform outcomes.
ChshEstimate simulate_chsh(const SourceParams& params, double state_visibility, const SimConfig& cfg);

}  // namespace bellcal::mc
