#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "bellcal/calibration.hpp"
#include "bellcal/click_model.hpp"
#include "bellcal/errors.hpp"

namespace bellcal::io {

/// Input error that points at a line of a text file.
class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses a run table: header row naming run_id, doubles_observed,
/// singles_observed, duration_s and optionally bell_observed, in any order.
/// Unknown columns are rejected. An empty bell_observed field means "absent".
std::vector<ExperimentRun> parse_runs_csv(std::istream& in, const std::string& source = "<input>");
std::vector<ExperimentRun> read_runs_file(const std::filesystem::path& path);

struct ToolConfig {
  double pulse_freq_hz{8.0e7};
  BellCertificate certificate{BellCertificate::chsh()};
  TruncationPolicy truncation;
  double lambda_tolerance{1e-10};
  double bell_tolerance{1e-8};
  int precision{4};

  void validate() const;
};

ToolConfig parse_config(const nlohmann::json& j);
ToolConfig read_config_file(const std::filesystem::path& path);
nlohmann::json to_json(const ToolConfig& cfg);

/// Calibration result together with the settings it was produced under.
struct StoredReport {
  CalibrationReport report;
  BellCertificate certificate;
  double pulse_freq_hz{8.0e7};
  TruncationPolicy truncation;
};

/// Full-precision JSON; doubles survive a write/read cycle bit for bit.
nlohmann::json report_to_json(const StoredReport& stored);
StoredReport report_from_json(const nlohmann::json& j);
StoredReport read_report_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Comma-separated values parsed as doubles, e.g. "2.625,2.6,2.5".
std::vector<double> parse_number_list(const std::string& text);

}  // namespace bellcal::io
