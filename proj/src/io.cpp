#include "bellcal/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "bellcal/errors.hpp"

namespace bellcal::io {

using nlohmann::json;

namespace {

constexpr std::array kRunColumns{"run_id", "doubles_observed", "singles_observed", "duration_s",
                                 "bell_observed"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
std::optional<T> parse_integer(const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::optional<double> parse_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  // strtod accepts hex floats and locale quirks; restrict to plain decimal notation.
  if (text.find_first_not_of("0123456789+-.eE") != std::string::npos) return std::nullopt;
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double value = 0.0;
  in >> value;
  if (in.fail() || !in.eof()) return std::nullopt;
  return value;
}

template <typename T>
T required(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) throw InputError(fmt::format("{}: missing key '{}'", where, key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(fmt::format("{}: key '{}' has the wrong type ({})", where, key, e.what()));
  }
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known, const char* where) {
  if (!j.is_object()) throw InputError(fmt::format("{}: expected a JSON object", where));
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InputError(fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

json certificate_to_json(const BellCertificate& c) {
  return {{"name", c.name},
          {"tsirelson_bound", c.tsirelson_bound},
          {"classical_bound", c.classical_bound},
          {"trace_zero", c.trace_zero}};
}

BellCertificate certificate_from_json(const json& j) {
  reject_unknown_keys(j, {"name", "tsirelson_bound", "classical_bound", "trace_zero"}, "certificate");
  BellCertificate c;
  c.name = required<std::string>(j, "name", "certificate");
  c.tsirelson_bound = required<double>(j, "tsirelson_bound", "certificate");
  c.classical_bound = required<double>(j, "classical_bound", "certificate");
  c.trace_zero = j.value("trace_zero", true);
  c.validate();
  return c;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: invalid JSON ({})", source, e.what()));
  }
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& message)
    : InputError(fmt::format("{}:{}: {}", source, line, message)), line_(line) {}

std::vector<ExperimentRun> parse_runs_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> column;
  std::vector<ExperimentRun> runs;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);

    if (column.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& name = fields[i];
        if (std::find(kRunColumns.begin(), kRunColumns.end(), name) == kRunColumns.end()) {
          throw ParseError(source, line_no, fmt::format("unknown column '{}'", name));
        }
        if (!column.emplace(name, i).second) {
          throw ParseError(source, line_no, fmt::format("duplicate column '{}'", name));
        }
      }
      for (const auto* name : {"run_id", "doubles_observed", "singles_observed", "duration_s"}) {
        if (!column.contains(name)) {
          throw ParseError(source, line_no, fmt::format("missing required column '{}'", name));
        }
      }
      continue;
    }

    if (fields.size() != column.size()) {
      throw ParseError(source, line_no, fmt::format("expected {} fields, found {}", column.size(),
                                                    fields.size()));
    }
    const auto field = [&](const char* name) -> const std::string& { return fields[column.at(name)]; };
    const auto count = [&](const char* name) {
      const auto& text = field(name);
      if (!text.empty() && text.front() == '-') {
        throw ParseError(source, line_no, fmt::format("{} must be nonnegative, got '{}'", name, text));
      }
      const auto value = parse_integer<std::uint64_t>(text);
      if (!value) {
        throw ParseError(source, line_no, fmt::format("{} must be a nonnegative integer, got '{}'", name, text));
      }
      return *value;
    };

    ExperimentRun run;
    const auto id = parse_integer<std::int64_t>(field("run_id"));
    if (!id) throw ParseError(source, line_no, fmt::format("run_id must be an integer, got '{}'", field("run_id")));
    run.run_id = *id;
    run.doubles_observed = count("doubles_observed");
    run.singles_observed = count("singles_observed");
    const auto duration = parse_double(field("duration_s"));
    if (!duration || !(*duration > 0.0) || !std::isfinite(*duration)) {
      throw ParseError(source, line_no,
                       fmt::format("duration_s must be a positive number, got '{}'", field("duration_s")));
    }
    run.duration_s = *duration;
    if (column.contains("bell_observed") && !field("bell_observed").empty()) {
      const auto bell = parse_double(field("bell_observed"));
      if (!bell || !std::isfinite(*bell)) {
        throw ParseError(source, line_no,
                         fmt::format("bell_observed must be a number, got '{}'", field("bell_observed")));
      }
      run.bell_observed = *bell;
    }
    if (std::any_of(runs.begin(), runs.end(), [&](const auto& r) { return r.run_id == run.run_id; })) {
      throw ParseError(source, line_no, fmt::format("duplicate run_id {}", run.run_id));
    }
    runs.push_back(run);
  }
  if (column.empty()) throw ParseError(source, line_no, "missing header row");
  return runs;
}

std::vector<ExperimentRun> read_runs_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open run file '{}'", path.string()));
  return parse_runs_csv(in, path.string());
}

void ToolConfig::validate() const {
  if (!(pulse_freq_hz > 0.0)) throw InputError("config: pulse_freq_hz must be positive");
  certificate.validate();
  try {
    truncation.validate();
  } catch (const DomainError& e) {
    throw InputError(fmt::format("config: {}", e.what()));
  }
  if (!(lambda_tolerance > 0.0)) throw InputError("config: lambda_tolerance must be positive");
  if (!(bell_tolerance > 0.0)) throw InputError("config: bell_tolerance must be positive");
  if (precision < 0 || precision > 17) throw InputError("config: precision must lie in [0, 17]");
}

ToolConfig parse_config(const json& j) {
  reject_unknown_keys(j,
                      {"pulse_freq_hz", "certificate", "tail_tolerance", "min_terms",
                       "lambda_tolerance", "bell_tolerance", "precision"},
                      "config");
  ToolConfig cfg;
  try {
    cfg.pulse_freq_hz = j.value("pulse_freq_hz", cfg.pulse_freq_hz);
    if (j.contains("certificate")) cfg.certificate = certificate_from_json(j.at("certificate"));
    cfg.truncation.tail_tolerance = j.value("tail_tolerance", cfg.truncation.tail_tolerance);
    cfg.truncation.min_terms = j.value("min_terms", cfg.truncation.min_terms);
    cfg.lambda_tolerance = j.value("lambda_tolerance", cfg.lambda_tolerance);
    cfg.bell_tolerance = j.value("bell_tolerance", cfg.bell_tolerance);
    cfg.precision = j.value("precision", cfg.precision);
  } catch (const json::exception& e) {
    throw InputError(fmt::format("config: {}", e.what()));
  }
  cfg.validate();
  return cfg;
}

ToolConfig read_config_file(const std::filesystem::path& path) {
  return parse_config(parse_json_text(read_text_file(path), path.string()));
}

json to_json(const ToolConfig& cfg) {
  return {{"pulse_freq_hz", cfg.pulse_freq_hz},
          {"certificate", certificate_to_json(cfg.certificate)},
          {"tail_tolerance", cfg.truncation.tail_tolerance},
          {"min_terms", cfg.truncation.min_terms},
          {"lambda_tolerance", cfg.lambda_tolerance},
          {"bell_tolerance", cfg.bell_tolerance},
          {"precision", cfg.precision}};
}

json report_to_json(const StoredReport& stored) {
  const auto& r = stored.report;
  const auto& f = r.fit;
  json runs = json::array();
  for (const auto& run : r.per_run) {
    runs.push_back({{"run_id", run.run_id},
                    {"lambda_calc", run.lambda_calc},
                    {"bell_linear_fit", run.bell_linear_fit}});
  }
  return {{"format", "bellcal-calibration-report"},
          {"version", 1},
          {"certificate", certificate_to_json(stored.certificate)},
          {"pulse_freq_hz", stored.pulse_freq_hz},
          {"truncation",
           {{"tail_tolerance", stored.truncation.tail_tolerance},
            {"min_terms", stored.truncation.min_terms}}},
          {"eta_hat", r.eta_hat},
          {"eta_row_mean", std::isfinite(r.eta_row_mean) ? json(r.eta_row_mean) : json(nullptr)},
          {"fit",
           {{"slope_a", f.slope_a},
            {"intercept_b", f.intercept_b},
            {"rmse", f.rmse},
            {"eta_used", f.eta_used},
            {"xi_used", f.xi_used},
            {"tsirelson_bound", f.tsirelson_bound},
            {"alpha", f.alpha},
            {"beta", f.beta}}},
          {"runs", runs}};
}

StoredReport report_from_json(const json& j) {
  constexpr const char* where = "report";
  if (!j.is_object() || j.value("format", "") != "bellcal-calibration-report") {
    throw InputError("report: not a calibration report (missing format tag)");
  }
  if (j.value("version", 0) != 1) throw InputError("report: unsupported version");

  StoredReport stored;
  stored.certificate = certificate_from_json(required<json>(j, "certificate", where));
  stored.pulse_freq_hz = required<double>(j, "pulse_freq_hz", where);
  const auto trunc = required<json>(j, "truncation", where);
  stored.truncation.tail_tolerance = required<double>(trunc, "tail_tolerance", "report.truncation");
  stored.truncation.min_terms = required<int>(trunc, "min_terms", "report.truncation");

  auto& r = stored.report;
  r.eta_hat = required<double>(j, "eta_hat", where);
  r.eta_row_mean = j.contains("eta_row_mean") && j.at("eta_row_mean").is_number()
                       ? j.at("eta_row_mean").get<double>()
                       : std::nan("");
  const auto fit = required<json>(j, "fit", where);
  r.fit.slope_a = required<double>(fit, "slope_a", "report.fit");
  r.fit.intercept_b = required<double>(fit, "intercept_b", "report.fit");
  r.fit.rmse = required<double>(fit, "rmse", "report.fit");
  r.fit.eta_used = required<double>(fit, "eta_used", "report.fit");
  r.fit.xi_used = required<double>(fit, "xi_used", "report.fit");
  r.fit.tsirelson_bound = required<double>(fit, "tsirelson_bound", "report.fit");
  r.fit.alpha = required<double>(fit, "alpha", "report.fit");
  r.fit.beta = required<double>(fit, "beta", "report.fit");
  for (const auto& run : required<json>(j, "runs", where)) {
    r.per_run.push_back({required<std::int64_t>(run, "run_id", "report.runs"),
                         required<double>(run, "lambda_calc", "report.runs"),
                         required<double>(run, "bell_linear_fit", "report.runs")});
  }
  if (!(r.eta_hat > 0.0 && r.eta_hat <= 1.0)) throw InputError("report: eta_hat outside (0, 1]");
  try {
    stored.truncation.validate();
  } catch (const DomainError& e) {
    throw InputError(fmt::format("report: {}", e.what()));
  }
  return stored;
}

StoredReport read_report_file(const std::filesystem::path& path) {
  return report_from_json(parse_json_text(read_text_file(path), path.string()));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw InputError(fmt::format("failed writing '{}'", path.string()));
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> values;
  for (const auto& item : split_fields(text)) {
    const auto value = parse_double(item);
    if (!value || !std::isfinite(*value)) {
      throw InputError(fmt::format("'{}' is not a number", item));
    }
    values.push_back(*value);
  }
  return values;
}

}  // namespace bellcal::io
