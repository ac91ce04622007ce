#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bellcal/calibration.hpp"
#include "bellcal/io.hpp"
#include "bellcal/prediction.hpp"

namespace bellcal::cli {

/// Process exit codes. Stable contract for scripts.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  ///< simulate: some |z| exceeded the alarm threshold
inline constexpr int kExitInput = 2;
inline constexpr int kExitModel = 3;

/// simulate flags a comparison row once |z| exceeds this.
inline constexpr double kZAlarm = 5.0;

enum class Format { Table, Csv, Json };

Format parse_format(const std::string& name);

struct CalibrateOptions {
  std::filesystem::path runs;
  std::optional<std::filesystem::path> config;
  std::filesystem::path report_out{"report.json"};
  std::filesystem::path csv_out{"calibration.csv"};
  Format format{Format::Table};
};

struct ExtrapolateOptions {
  std::filesystem::path report;
  std::vector<double> targets;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> csv_out;
  Format format{Format::Table};
};

struct PredictOptions {
  std::filesystem::path report;
  std::vector<double> lambdas;
  std::vector<double> rates;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> csv_out;
  Format format{Format::Table};
};

struct SimulateOptions {
  double eta{0.1134};
  double lambda_mean{0.0849};
  double state_visibility{1.0};
  std::uint64_t pulses{10'000'000};
  std::uint64_t seed{42};
  std::uint64_t block_size{1u << 16};
  unsigned threads{0};
  std::optional<std::filesystem::path> config;
  Format format{Format::Table};
};

struct SweepOptions {
  std::filesystem::path report;
  double lambda_min{0.0};
  double lambda_max{0.75};
  int steps{100};
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> csv_out;
  Format format{Format::Csv};
};

/// One extrapolation row; `status` is "ok", "infeasible" or "divergent".
struct ExtrapolationRow {
  double target_bell{0.0};
  std::optional<double> lambda_mean;
  std::optional<double> events_per_second;
  std::string status;
  std::string message;
};

std::vector<ExtrapolationRow> extrapolate(const io::StoredReport& stored, std::span<const double> targets,
                                          const io::ToolConfig& cfg);

std::string render_calibration_csv(std::span<const ExperimentRun> runs, const CalibrationReport& report,
                                   int precision);

/// Each cmd_* returns a process exit code; errors are reported on `err`.
int cmd_calibrate(const CalibrateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_extrapolate(const ExtrapolateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace bellcal::cli
