#include "bellcal/commands.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "bellcal/errors.hpp"
#include "bellcal/montecarlo.hpp"

namespace bellcal::cli {

using nlohmann::json;

namespace {

std::string fixed(double v, int precision) { return fmt::format("{:.{}f}", v, precision); }

io::ToolConfig load_config(const std::optional<std::filesystem::path>& path) {
  return path ? io::read_config_file(*path) : io::ToolConfig{};
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitModel;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitModel;
  }
}

// Settings that must match the calibration; tolerances and precision still come from --config.
struct ModelContext {
  io::StoredReport stored;
  io::ToolConfig cfg;

  double eta() const { return stored.report.fit.eta_used; }
  SourceParams params(double lambda) const { return {eta(), lambda, stored.pulse_freq_hz}; }
};

ModelContext load_model(const std::filesystem::path& report,
                        const std::optional<std::filesystem::path>& config) {
  return {io::read_report_file(report), load_config(config)};
}

// `linear` optionally carries the straight-line fit a·λ + b per point (predict only).
std::string points_csv(std::span<const PredictionPoint> points, std::span<const double> linear, int precision) {
  std::string s = linear.empty() ? "lambda_mean,visibility,bell_value,events_per_second\n"
                                  : "lambda_mean,visibility,bell_value,bell_linear_fit,events_per_second\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    s += fmt::format("{},{},{},", fixed(p.lambda_mean, precision), fixed(p.visibility, precision),
                     fixed(p.bell_value, precision));
    if (!linear.empty()) s += fixed(linear[i], precision) + ",";
    s += fixed(p.events_per_second, 2) + "\n";
  }
  return s;
}

std::string points_table(std::span<const PredictionPoint> points, std::span<const double> linear, int precision) {
  std::string s = fmt::format("{:>12}  {:>12}  {:>12}", "lambda", "visibility", "Bell");
  if (!linear.empty()) s += fmt::format("  {:>12}", "Bell (linear)");
  s += fmt::format("  {:>16}\n", "events/s");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    s += fmt::format("{:>12}  {:>12}  {:>12}", fixed(p.lambda_mean, precision), fixed(p.visibility, precision),
                     fixed(p.bell_value, precision));
    if (!linear.empty()) s += fmt::format("  {:>12}", fixed(linear[i], precision));
    s += fmt::format("  {:>16.0f}\n", p.events_per_second);
  }
  return s;
}

json points_json(std::span<const PredictionPoint> points, std::span<const double> linear) {
  json arr = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    json row = {{"lambda_mean", p.lambda_mean},
                {"visibility", p.visibility},
                {"bell_value", p.bell_value},
                {"events_per_second", p.events_per_second}};
    if (!linear.empty()) row["bell_linear_fit"] = linear[i];
    arr.push_back(std::move(row));
  }
  return arr;
}

void emit_points(std::span<const PredictionPoint> points, std::span<const double> linear, Format format,
                 int precision, const std::optional<std::filesystem::path>& csv_out, std::ostream& out) {
  const std::string csv = points_csv(points, linear, precision);
  if (csv_out) io::write_text_file(*csv_out, csv);
  switch (format) {
    case Format::Table: out << points_table(points, linear, precision); break;
    case Format::Csv: out << csv; break;
    case Format::Json: out << points_json(points, linear).dump(2) << '\n'; break;
  }
}

std::string calibration_table(const io::StoredReport& stored, std::span<const ExperimentRun> runs,
                              int precision) {
  const auto& r = stored.report;
  const auto& f = r.fit;
  std::string s;
  s += fmt::format("Calibration for {} (T = {}, classical bound = {}, f = {:.0f} Hz)\n",
                   stored.certificate.name, fixed(stored.certificate.tsirelson_bound, precision),
                   fixed(stored.certificate.classical_bound, precision), stored.pulse_freq_hz);
  s += fmt::format("  {:<22}{:>12}\n", "eta (pooled)", fixed(r.eta_hat, precision));
  s += fmt::format("  {:<22}{:>12}\n", "eta (per-run mean)",
                   std::isfinite(r.eta_row_mean) ? fixed(r.eta_row_mean, precision) : "n/a");
  s += fmt::format("  {:<22}{:>12}\n", "slope a", fixed(f.slope_a, precision));
  s += fmt::format("  {:<22}{:>12}\n", "intercept b", fixed(f.intercept_b, precision));
  s += fmt::format("  {:<22}{:>12}\n", "RMSE", fixed(f.rmse, precision));
  s += fmt::format("  {:<22}{:>12}\n", "xi(eta)", fixed(f.xi_used, precision));
  s += fmt::format("  {:<22}{:>12}\n", "alpha", fixed(f.alpha, precision));
  s += fmt::format("  {:<22}{:>12}\n", "beta", fixed(f.beta, precision));
  s += '\n';
  s += fmt::format("{:>5}  {:>12}  {:>12}  {:>8}  {:>10}  {:>8}  {:>11}  {:>8}\n", "run", "c_obs",
                   "s_obs", "t [s]", "events/s", "B_obs", "lambda_calc", "B_calc");
  for (std::size_t i = 0; i < r.per_run.size(); ++i) {
    const auto& row = r.per_run[i];
    const auto& run = runs[i];
    s += fmt::format("{:>5}  {:>12}  {:>12}  {:>8}  {:>10.0f}  {:>8}  {:>11}  {:>8}\n", row.run_id,
                     run.doubles_observed, run.singles_observed, fmt::format("{:g}", run.duration_s),
                     static_cast<double>(run.doubles_observed) / run.duration_s,
                     fixed(*run.bell_observed, precision), fixed(row.lambda_calc, precision),
                     fixed(row.bell_linear_fit, precision));
  }
  return s;
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "table") return Format::Table;
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw InputError(fmt::format("unknown format '{}' (expected table, csv or json)", name));
}

std::string render_calibration_csv(std::span<const ExperimentRun> runs, const CalibrationReport& report,
                                   int precision) {
  std::string s =
      "run_id,doubles_observed,singles_observed,duration_s,events_per_second,bell_observed,"
      "lambda_calc,bell_calc\n";
  for (const auto& row : report.per_run) {
    const auto it = std::find_if(runs.begin(), runs.end(),
                                 [&](const auto& run) { return run.run_id == row.run_id; });
    if (it == runs.end()) throw std::logic_error("report row without matching run");
    s += fmt::format("{},{},{},{:g},{},{},{},{}\n", row.run_id, it->doubles_observed,
                     it->singles_observed, it->duration_s,
                     fixed(static_cast<double>(it->doubles_observed) / it->duration_s, 2),
                     it->bell_observed ? fixed(*it->bell_observed, precision) : "",
                     fixed(row.lambda_calc, precision), fixed(row.bell_linear_fit, precision));
  }
  return s;
}

std::vector<ExtrapolationRow> extrapolate(const io::StoredReport& stored, std::span<const double> targets,
                                          const io::ToolConfig& cfg) {
  std::vector<ExtrapolationRow> rows;
  const double eta = stored.report.fit.eta_used;
  for (const double target : targets) {
    ExtrapolationRow row{target, std::nullopt, std::nullopt, "ok", ""};
    try {
      const double lambda = solve_lambda_for_bell(stored.report.fit, target, eta, stored.certificate,
                                                  stored.truncation, {cfg.bell_tolerance, false});
      row.lambda_mean = lambda;
      row.events_per_second = events_per_second({eta, lambda, stored.pulse_freq_hz}, stored.truncation);
    } catch (const InfeasibleTargetError& e) {
      row.status = "infeasible";
      row.message = e.what();
    } catch (const DivergenceError& e) {
      row.status = "divergent";
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_calibrate(const CalibrateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(opts.config);
    auto runs = io::read_runs_file(opts.runs);
    std::sort(runs.begin(), runs.end(), [](const auto& l, const auto& r) { return l.run_id < r.run_id; });
    for (const auto& run : runs) {
      if (!run.bell_observed) {
        throw InputError(fmt::format("{}: run {} has no bell_observed value", opts.runs.string(), run.run_id));
      }
    }
    const io::StoredReport stored{
        calibrate(runs, cfg.certificate, cfg.pulse_freq_hz, cfg.truncation, cfg.lambda_tolerance),
        cfg.certificate, cfg.pulse_freq_hz, cfg.truncation};

    const json report_json = io::report_to_json(stored);
    io::write_text_file(opts.report_out, report_json.dump(2) + "\n");
    const std::string csv = render_calibration_csv(runs, stored.report, cfg.precision);
    io::write_text_file(opts.csv_out, csv);

    switch (opts.format) {
      case Format::Table: out << calibration_table(stored, runs, cfg.precision); break;
      case Format::Csv: out << csv; break;
      case Format::Json: out << report_json.dump(2) << '\n'; break;
    }
    return kExitOk;
  });
}

int cmd_extrapolate(const ExtrapolateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.targets.empty()) throw InputError("no target Bell values given");
    const auto ctx = load_model(opts.report, opts.config);
    const auto rows = extrapolate(ctx.stored, opts.targets, ctx.cfg);
    const int p = ctx.cfg.precision;

    std::string csv = "target_bell,lambda_mean,events_per_second,status\n";
    std::size_t warnings = 0;
    for (const auto& row : rows) {
      csv += fmt::format("{},{},{},{}\n", fixed(row.target_bell, p),
                         row.lambda_mean ? fixed(*row.lambda_mean, p) : "",
                         row.events_per_second ? fixed(*row.events_per_second, 2) : "", row.status);
      if (row.status != "ok") {
        ++warnings;
        err << "warning: target " << fixed(row.target_bell, p) << ": " << row.message << '\n';
      }
    }
    if (opts.csv_out) io::write_text_file(*opts.csv_out, csv);

    switch (opts.format) {
      case Format::Table: {
        out << fmt::format("{:>16}  {:>10}  {:>12}\n", "events/s", "B_calc", "lambda_calc");
        for (const auto& row : rows) {
          if (row.status == "ok") {
            out << fmt::format("{:>16.0f}  {:>10}  {:>12}\n", *row.events_per_second,
                               fixed(row.target_bell, p), fixed(*row.lambda_mean, p));
          } else {
            out << fmt::format("{:>16}  {:>10}  {:>12}\n", row.status, fixed(row.target_bell, p), "-");
          }
        }
        break;
      }
      case Format::Csv: out << csv; break;
      case Format::Json: {
        json arr = json::array();
        for (const auto& row : rows) {
          arr.push_back({{"target_bell", row.target_bell},
                         {"lambda_mean", row.lambda_mean ? json(*row.lambda_mean) : json(nullptr)},
                         {"events_per_second",
                          row.events_per_second ? json(*row.events_per_second) : json(nullptr)},
                         {"status", row.status}});
        }
        out << arr.dump(2) << '\n';
        break;
      }
    }
    if (warnings > 0) err << warnings << " target(s) could not be extrapolated\n";
    return kExitOk;
  });
}

int cmd_predict(const PredictOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.lambdas.empty() && opts.rates.empty()) throw InputError("give --lambdas and/or --rates");
    for (const double v : opts.lambdas) {
      if (!(v >= 0.0)) throw InputError(fmt::format("lambda values must be >= 0, got {}", v));
    }
    for (const double v : opts.rates) {
      if (!(v >= 0.0)) throw InputError(fmt::format("event rates must be >= 0, got {}", v));
    }
    const auto ctx = load_model(opts.report, opts.config);
    const auto& fit = ctx.stored.report.fit;

    std::vector<double> lambdas = opts.lambdas;
    for (const double rate : opts.rates) {
      lambdas.push_back(solve_lambda_for_rate(rate, ctx.eta(), ctx.stored.pulse_freq_hz,
                                              ctx.stored.truncation, ctx.cfg.lambda_tolerance));
    }
    std::vector<PredictionPoint> points;
    std::vector<double> linear;
    for (const double lambda : lambdas) {
      linear.push_back(fit.slope_a * lambda + fit.intercept_b);
      const auto params = ctx.params(lambda);
      points.push_back({lambda, visibility(params, ctx.stored.truncation),
                        predict_bell(fit, params, ctx.stored.certificate, ctx.stored.truncation),
                        events_per_second(params, ctx.stored.truncation)});
    }
    emit_points(points, linear, opts.format, ctx.cfg.precision, opts.csv_out, out);
    return kExitOk;
  });
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(opts.lambda_min >= 0.0 && opts.lambda_min < opts.lambda_max)) {
      throw InputError(fmt::format("need 0 <= lambda_min < lambda_max, got [{}, {}]", opts.lambda_min,
                                   opts.lambda_max));
    }
    if (opts.steps < 2) throw InputError(fmt::format("steps must be >= 2, got {}", opts.steps));
    const auto ctx = load_model(opts.report, opts.config);
    std::vector<double> grid(static_cast<std::size_t>(opts.steps));
    for (int i = 0; i < opts.steps; ++i) {
      grid[static_cast<std::size_t>(i)] =
          opts.lambda_min + (opts.lambda_max - opts.lambda_min) * i / (opts.steps - 1);
    }
    grid.back() = opts.lambda_max;
    const auto points = sweep(ctx.stored.report.fit, ctx.eta(), ctx.stored.certificate, grid,
                              ctx.stored.truncation, ctx.stored.pulse_freq_hz);
    emit_points(points, {}, opts.format, ctx.cfg.precision, opts.csv_out, out);
    return kExitOk;
  });
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(opts.config);
    const SourceParams params{opts.eta, opts.lambda_mean, cfg.pulse_freq_hz};
    try {
      params.validate();
    } catch (const DomainError& e) {
      throw InputError(e.what());
    }
    if (!(opts.state_visibility >= 0.0 && opts.state_visibility <= 1.0)) {
      throw InputError(fmt::format("state visibility must lie in [0, 1], got {}", opts.state_visibility));
    }
    const mc::SimConfig sim{opts.pulses, opts.seed, opts.block_size, opts.threads};
    sim.validate();

    const auto est = mc::simulate_chsh(params, opts.state_visibility, sim);
    const auto n = static_cast<double>(est.tally.pulses);

    struct Row {
      std::string name;
      double empirical;
      double analytic;
      double std_error;
      std::optional<double> z;
    };
    std::vector<Row> rows;
    const auto rate_row = [&](ClickKind kind, std::uint64_t count) {
      const double p = expected_rate(params, kind, cfg.truncation);
      const double se = std::sqrt(p * (1.0 - p) / n);
      const double emp = static_cast<double>(count) / n;
      std::optional<double> z;
      if (se > 0.0) z = (emp - p) / se;
      else if (emp != p) z = INFINITY;
      rows.push_back({fmt::format("rate_{}", to_string(kind)), emp, p, se, z});
    };
    rate_row(ClickKind::Single, est.tally.singles);
    rate_row(ClickKind::Double, est.tally.doubles);
    rate_row(ClickKind::Entangled, est.tally.entangled_coincidences);

    const double v = params.eta > 0.0 ? visibility(params, cfg.truncation) : std::nan("");
    if (est.tally.doubles > 0 && std::isfinite(v)) {
      const double emp = static_cast<double>(est.tally.entangled_coincidences) /
                         static_cast<double>(est.tally.doubles);
      const double se = std::sqrt(v * (1.0 - v) / static_cast<double>(est.tally.doubles));
      std::optional<double> z;
      if (se > 0.0) z = (emp - v) / se;
      else if (emp != v) z = INFINITY;
      rows.push_back({"visibility", emp, v, se, z});
    } else {
      rows.push_back({"visibility", std::nan(""), v, std::nan(""), std::nullopt});
    }

    const double tsirelson = 2.0 * std::sqrt(2.0);
    if (std::isfinite(est.value) && std::isfinite(v)) {
      const double emp = est.value / tsirelson;
      const double expect = opts.state_visibility * v;
      const double se = est.std_error / tsirelson;
      std::optional<double> z;
      if (se > 0.0) z = (emp - expect) / se;
      rows.push_back({"chsh_over_tsirelson", emp, expect, se, z});
    } else {
      rows.push_back({"chsh_over_tsirelson", std::nan(""), opts.state_visibility * v, std::nan(""),
                      std::nullopt});
    }

    bool alarm = false;
    for (const auto& row : rows) alarm = alarm || (row.z && !(std::abs(*row.z) <= kZAlarm));

    const auto num = [](double x) { return std::isfinite(x) ? fmt::format("{:.6e}", x) : std::string("n/a"); };
    const auto zstr = [](const std::optional<double>& z) {
      return z ? fmt::format("{:.3f}", *z) : std::string("n/a");
    };
    switch (opts.format) {
      case Format::Table:
        out << fmt::format("Monte Carlo: eta = {}, lambda = {}, state visibility = {}, pulses = {}, seed = {}\n",
                           opts.eta, opts.lambda_mean, opts.state_visibility, opts.pulses, opts.seed);
        out << fmt::format("tally: singles = {}, doubles = {}, entangled = {}\n", est.tally.singles,
                           est.tally.doubles, est.tally.entangled_coincidences);
        out << fmt::format("{:<22}{:>16}{:>16}{:>16}{:>10}\n", "quantity", "empirical", "analytic",
                           "std_error", "z");
        for (const auto& row : rows) {
          out << fmt::format("{:<22}{:>16}{:>16}{:>16}{:>10}\n", row.name, num(row.empirical),
                             num(row.analytic), num(row.std_error), zstr(row.z));
        }
        break;
      case Format::Csv:
        out << "quantity,empirical,analytic,std_error,z\n";
        for (const auto& row : rows) {
          out << fmt::format("{},{},{},{},{}\n", row.name, num(row.empirical), num(row.analytic),
                             num(row.std_error), zstr(row.z));
        }
        break;
      case Format::Json: {
        json j = {{"eta", opts.eta},
                  {"lambda_mean", opts.lambda_mean},
                  {"state_visibility", opts.state_visibility},
                  {"pulses", opts.pulses},
                  {"seed", opts.seed},
                  {"tally",
                   {{"singles", est.tally.singles},
                    {"doubles", est.tally.doubles},
                    {"entangled_coincidences", est.tally.entangled_coincidences}}}};
        json arr = json::array();
        const auto maybe = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
        for (const auto& row : rows) {
          arr.push_back({{"quantity", row.name},
                         {"empirical", maybe(row.empirical)},
                         {"analytic", maybe(row.analytic)},
                         {"std_error", maybe(row.std_error)},
                         {"z", row.z ? maybe(*row.z) : json(nullptr)}});
        }
        j["comparisons"] = arr;
        out << j.dump(2) << '\n';
        break;
      }
    }
    if (alarm) {
      err << fmt::format("warning: at least one |z| exceeds {}\n", kZAlarm);
      return kExitCheckFailed;
    }
    return kExitOk;
  });
}

}  // namespace bellcal::cli
