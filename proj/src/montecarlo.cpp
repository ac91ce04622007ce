#include "bellcal/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "bellcal/errors.hpp"

namespace bellcal::mc {

namespace {

struct BlockResult {
  PulseTally tally;
  std::array<std::array<std::uint64_t, 2>, 2> coincidences{};
  std::array<std::array<std::int64_t, 2>, 2> product_sums{};
};

struct PulseOutcome {
  bool single{false};
  bool double_click{false};
  bool entangled{false};
};

// Bit 0 of a draw picks the detector; bits 11..63 decide detection. The two are independent.
PulseOutcome classify_pulse(std::uint64_t pairs, double eta, std::mt19937_64& engine) {
  unsigned alice_mask = 0;
  unsigned bob_mask = 0;
  std::uint64_t alice_hits = 0;
  std::uint64_t bob_hits = 0;
  std::uint64_t alice_pair = 0;
  std::uint64_t bob_pair = 0;
  for (std::uint64_t pair = 0; pair < pairs; ++pair) {
    const std::uint64_t a = engine();
    if (static_cast<double>(a >> 11) * 0x1p-53 < eta) {
      alice_mask |= 1u << (a & 1u);
      ++alice_hits;
      alice_pair = pair;
    }
    const std::uint64_t b = engine();
    if (static_cast<double>(b >> 11) * 0x1p-53 < eta) {
      bob_mask |= 1u << (b & 1u);
      ++bob_hits;
      bob_pair = pair;
    }
  }
  PulseOutcome out;
  out.single = std::popcount(alice_mask) + std::popcount(bob_mask) == 1;
  out.double_click = alice_mask != 0 && bob_mask != 0;
  out.entangled = alice_hits == 1 && bob_hits == 1 && alice_pair == bob_pair;
  return out;
}

BlockResult run_block(const SourceParams& params, std::optional<double> state_visibility,
                      std::uint64_t seed, std::uint64_t block_index, std::uint64_t pulses) {
  auto engine = block_engine(seed, block_index);
  BlockResult result;
  result.tally.pulses = pulses;
  for (std::uint64_t i = 0; i < pulses; ++i) {
    const std::uint64_t pairs = sample_poisson(params.lambda_mean, engine);
    if (pairs == 0) continue;
    const PulseOutcome out = classify_pulse(pairs, params.eta, engine);
    result.tally.singles += out.single;
    result.tally.doubles += out.double_click;
    result.tally.entangled_coincidences += out.entangled;
    if (!state_visibility || !out.double_click) continue;

    const std::uint64_t draw = engine();
    const int x = static_cast<int>(draw & 1u);
    const int y = static_cast<int>((draw >> 1) & 1u);
    const int alice = (draw >> 2) & 1u ? 1 : -1;
    int bob = 0;
    if (out.entangled) {
      const double corr = *state_visibility * ideal_chsh_correlator(x, y);
      bob = uniform01(engine) < 0.5 * (1.0 + corr) ? alice : -alice;
    } else {
      bob = (draw >> 3) & 1u ? 1 : -1;
    }
    ++result.coincidences[x][y];
    result.product_sums[x][y] += alice * bob;
  }
  return result;
}

BlockResult run_blocks(const SourceParams& params, std::optional<double> state_visibility,
                       const SimConfig& cfg) {
  params.validate();
  cfg.validate();
  const std::uint64_t n_blocks = (cfg.n_pulses + cfg.block_size - 1) / cfg.block_size;
  std::vector<BlockResult> blocks(n_blocks);

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    try {
      for (std::uint64_t b = next++; b < n_blocks; b = next++) {
        const std::uint64_t begin = b * cfg.block_size;
        const std::uint64_t count = std::min(cfg.block_size, cfg.n_pulses - begin);
        blocks[b] = run_block(params, state_visibility, cfg.seed, b, count);
      }
    } catch (...) {
      const std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  unsigned threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  BlockResult total;
  for (const auto& block : blocks) {
    total.tally += block.tally;
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        total.coincidences[x][y] += block.coincidences[x][y];
        total.product_sums[x][y] += block.product_sums[x][y];
      }
    }
  }
  return total;
}

}  // namespace

PulseTally& PulseTally::operator+=(const PulseTally& other) {
  pulses += other.pulses;
  singles += other.singles;
  doubles += other.doubles;
  entangled_coincidences += other.entangled_coincidences;
  return *this;
}

void SimConfig::validate() const {
  if (n_pulses == 0) throw InputError("number of pulses must be positive");
  if (block_size == 0) throw InputError("block size must be positive");
}

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block_index),
                    static_cast<std::uint32_t>(block_index >> 32)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& engine) { return static_cast<double>(engine() >> 11) * 0x1p-53; }

std::uint64_t sample_poisson(double lambda_mean, std::mt19937_64& engine) {
  if (!(lambda_mean >= 0.0) || !std::isfinite(lambda_mean)) {
    throw DomainError(fmt::format("Poisson mean must be finite and >= 0, got {}", lambda_mean));
  }
  if (lambda_mean == 0.0) return 0;
  if (lambda_mean >= 10.0) {
    const auto parts = static_cast<std::uint64_t>(std::ceil(lambda_mean / 8.0));
    const double part_mean = lambda_mean / static_cast<double>(parts);
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < parts; ++i) total += sample_poisson(part_mean, engine);
    return total;
  }
  const double u = uniform01(engine);
  std::uint64_t k = 0;
  double term = std::exp(-lambda_mean);
  double cdf = term;
  while (u >= cdf) {
    ++k;
    term *= lambda_mean / static_cast<double>(k);
    if (term < std::numeric_limits<double>::min()) break;  // cdf has converged short of u
    cdf += term;
  }
  return k;
}

PulseTally simulate_pulses(const SourceParams& params, const SimConfig& cfg) {
  return run_blocks(params, std::nullopt, cfg).tally;
}

double ideal_chsh_correlator(int x, int y) {
  const double c = 1.0 / std::sqrt(2.0);
  return (x == 1 && y == 1) ? -c : c;
}

ChshEstimate simulate_chsh(const SourceParams& params, double state_visibility, const SimConfig& cfg) {
  if (!(state_visibility >= 0.0 && state_visibility <= 1.0)) {
    throw DomainError(fmt::format("state visibility must lie in [0, 1], got {}", state_visibility));
  }
  const BlockResult total = run_blocks(params, state_visibility, cfg);

  ChshEstimate est;
  est.tally = total.tally;
  est.coincidences = total.coincidences;
  est.product_sums = total.product_sums;
  double variance = 0.0;
  bool complete = true;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      const auto n = total.coincidences[x][y];
      if (n == 0) {
        complete = false;
        continue;
      }
      const double e = static_cast<double>(total.product_sums[x][y]) / static_cast<double>(n);
      est.correlators[x][y] = e;
      variance += (1.0 - e * e) / static_cast<double>(n);
    }
  }
  if (!complete) {
    est.value = std::nan("");
    est.std_error = std::nan("");
    return est;
  }
  const auto& e = est.correlators;
  est.value = e[0][0] + e[0][1] + e[1][0] - e[1][1];
  est.std_error = std::sqrt(variance);
  return est;
}

}  // namespace bellcal::mc
