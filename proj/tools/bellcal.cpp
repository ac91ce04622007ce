// bellcal: calibrate the accidental-coincidence Bell model and extrapolate it.
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "bellcal/commands.hpp"
#include "bellcal/errors.hpp"

namespace {

using namespace bellcal::cli;

void add_common(CLI::App* cmd, std::optional<std::filesystem::path>& config, std::string& format) {
  cmd->add_option("--config", config, "JSON configuration file");
  cmd->add_option("--format", format, "Output format on stdout")
      ->check(CLI::IsMember({"table", "csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accidental-coincidence model for SPDC Bell experiments"};
  app.require_subcommand(1);

  CalibrateOptions cal;
  std::string cal_format = "table";
  auto* calibrate = app.add_subcommand("calibrate", "Fit the model to a run table");
  calibrate->add_option("--runs", cal.runs, "Run table CSV")->required();
  calibrate->add_option("--report", cal.report_out, "Where to write the JSON report");
  calibrate->add_option("--out", cal.csv_out, "Where to write the per-run CSV");
  add_common(calibrate, cal.config, cal_format);

  ExtrapolateOptions ext;
  std::string ext_format = "table";
  std::string ext_targets;
  auto* extrapolate = app.add_subcommand("extrapolate", "Solve pair rate and event rate for target Bell values");
  extrapolate->add_option("--report", ext.report, "Calibration report JSON")->required();
  extrapolate->add_option("--targets", ext_targets, "Comma-separated Bell values")->required();
  extrapolate->add_option("--out", ext.csv_out, "Also write the rows as CSV");
  add_common(extrapolate, ext.config, ext_format);

  PredictOptions pred;
  std::string pred_format = "table";
  std::string pred_lambdas;
  std::string pred_rates;
  auto* predict = app.add_subcommand("predict", "Forward predictions at given pair or event rates");
  predict->add_option("--report", pred.report, "Calibration report JSON")->required();
  predict->add_option("--lambdas", pred_lambdas, "Comma-separated mean pairs per pulse");
  predict->add_option("--rates", pred_rates, "Comma-separated double-click rates in events/s");
  predict->add_option("--out", pred.csv_out, "Also write the rows as CSV");
  add_common(predict, pred.config, pred_format);

  SimulateOptions sim;
  std::string sim_format = "table";
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the analytic rates");
  simulate->add_option("--eta", sim.eta, "Detection efficiency")->capture_default_str();
  simulate->add_option("--lambda", sim.lambda_mean, "Mean pairs per pulse")->capture_default_str();
  simulate->add_option("--visibility", sim.state_visibility, "Visibility of the prepared state")
      ->capture_default_str();
  simulate->add_option("--pulses", sim.pulses, "Number of pulses")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--block-size", sim.block_size, "Pulses per RNG block")->capture_default_str();
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
  add_common(simulate, sim.config, sim_format);

  SweepOptions swp;
  std::string swp_format = "csv";
  auto* sweep = app.add_subcommand("sweep", "Tabulate visibility, Bell value and event rate over a lambda grid");
  sweep->add_option("--report", swp.report, "Calibration report JSON")->required();
  sweep->add_option("--lambda-min", swp.lambda_min)->capture_default_str();
  sweep->add_option("--lambda-max", swp.lambda_max)->capture_default_str();
  sweep->add_option("--steps", swp.steps)->capture_default_str();
  sweep->add_option("--out", swp.csv_out, "Also write the rows as CSV");
  add_common(sweep, swp.config, swp_format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*calibrate) {
      cal.format = parse_format(cal_format);
      return cmd_calibrate(cal, std::cout, std::cerr);
    }
    if (*extrapolate) {
      ext.format = parse_format(ext_format);
      ext.targets = bellcal::io::parse_number_list(ext_targets);
      return cmd_extrapolate(ext, std::cout, std::cerr);
    }
    if (*predict) {
      pred.format = parse_format(pred_format);
      if (!pred_lambdas.empty()) pred.lambdas = bellcal::io::parse_number_list(pred_lambdas);
      if (!pred_rates.empty()) pred.rates = bellcal::io::parse_number_list(pred_rates);
      return cmd_predict(pred, std::cout, std::cerr);
    }
    if (*simulate) {
      sim.format = parse_format(sim_format);
      return cmd_simulate(sim, std::cout, std::cerr);
    }
    if (*sweep) {
      swp.format = parse_format(swp_format);
      return cmd_sweep(swp, std::cout, std::cerr);
    }
  } catch (const bellcal::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
