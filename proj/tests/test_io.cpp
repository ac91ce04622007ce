#include <cstring>
#include <random>
#include <sstream>

#include "doctest.h"

#include "bellcal/errors.hpp"
#include "bellcal/io.hpp"

using namespace bellcal;
using namespace bellcal::io;

namespace {

std::vector<ExperimentRun> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_runs_csv(in, "runs.csv");
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("run table parsing") {
  const auto runs = parse(
      "run_id,doubles_observed,singles_observed,duration_s,bell_observed\n"
      "1,37892989,549605351,540,2.6502\n"
      "2,43322946,660223194,832,\n");
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].run_id == 1);
  CHECK(runs[0].doubles_observed == 37892989u);
  CHECK(runs[0].singles_observed == 549605351u);
  CHECK(runs[0].duration_s == 540.0);
  CHECK(*runs[0].bell_observed == 2.6502);
  CHECK_FALSE(runs[1].bell_observed.has_value());
}

TEST_CASE("run table accepts reordered columns, CRLF and no Bell column") {
  const auto runs = parse("duration_s,run_id,singles_observed,doubles_observed\r\n10.5,4,20,10\r\n\r\n");
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].run_id == 4);
  CHECK(runs[0].doubles_observed == 10u);
  CHECK(runs[0].duration_s == 10.5);
  CHECK_FALSE(runs[0].bell_observed);
}

TEST_CASE("run table errors carry line numbers") {
  const std::string header = "run_id,doubles_observed,singles_observed,duration_s,bell_observed\n";
  CHECK(error_line(header + "1,10,20,5,2.7\n2,-3,20,5,2.7\n") == 3);
  CHECK(error_line(header + "1,10,20,0,2.7\n") == 2);
  CHECK(error_line(header + "1,10,20,5\n") == 2);
  CHECK(error_line(header + "1,1.5,20,5,2.7\n") == 2);
  CHECK(error_line(header + "1,10,20,5,abc\n") == 2);
  CHECK(error_line(header + "1,10,20,5,2.7\n1,10,20,5,2.7\n") == 3);
  CHECK(error_line("run_id,doubles_observed,singles_observed,duration_s,weather\n") == 1);
  CHECK(error_line("run_id,doubles_observed,duration_s\n") == 1);
  CHECK_THROWS_AS(parse(""), ParseError);

  try {
    parse("run_id,doubles_observed,singles_observed,duration_s,extra\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unknown column 'extra'") != std::string::npos);
  }
}

TEST_CASE("config parsing") {
  const auto defaults = parse_config(nlohmann::json::object());
  CHECK(defaults.pulse_freq_hz == 8.0e7);
  CHECK(defaults.certificate.name == "CHSH");
  CHECK(defaults.precision == 4);

  const auto cfg = parse_config(nlohmann::json::parse(R"({
    "pulse_freq_hz": 7.6e7,
    "certificate": {"name": "custom", "tsirelson_bound": 3.0, "classical_bound": 2.5},
    "tail_tolerance": 1e-14,
    "precision": 6
  })"));
  CHECK(cfg.pulse_freq_hz == 7.6e7);
  CHECK(cfg.certificate.tsirelson_bound == 3.0);
  CHECK(cfg.certificate.trace_zero);
  CHECK(cfg.truncation.tail_tolerance == 1e-14);
  CHECK(cfg.precision == 6);
  CHECK(parse_config(to_json(cfg)).certificate.name == "custom");

  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"pulse_freq": 1})")), InputError);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"pulse_freq_hz": -1})")), InputError);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"tail_tolerance": 0})")), InputError);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(
                      R"({"certificate": {"name": "x", "tsirelson_bound": 2, "classical_bound": 3}})")),
                  InputError);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"precision": "four"})")), InputError);
}

TEST_CASE("report JSON preserves every bit") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    StoredReport s;
    s.certificate = BellCertificate::chsh();
    s.pulse_freq_hz = 8e7 + u(rng);
    s.report.eta_hat = 0.5 + u(rng) / 10.0;
    s.report.eta_row_mean = u(rng);
    s.report.fit = {u(rng), u(rng), std::abs(u(rng)), 0.3, 1.91, s.certificate.tsirelson_bound, u(rng), u(rng)};
    for (int i = 0; i < 3; ++i) s.report.per_run.push_back({i, std::abs(u(rng)), u(rng)});

    const auto back = report_from_json(nlohmann::json::parse(report_to_json(s).dump(2)));
    CHECK(same_bits(back.pulse_freq_hz, s.pulse_freq_hz));
    CHECK(same_bits(back.report.eta_hat, s.report.eta_hat));
    CHECK(same_bits(back.report.eta_row_mean, s.report.eta_row_mean));
    CHECK(same_bits(back.report.fit.slope_a, s.report.fit.slope_a));
    CHECK(same_bits(back.report.fit.intercept_b, s.report.fit.intercept_b));
    CHECK(same_bits(back.report.fit.alpha, s.report.fit.alpha));
    CHECK(same_bits(back.report.fit.beta, s.report.fit.beta));
    REQUIRE(back.report.per_run.size() == 3);
    CHECK(same_bits(back.report.per_run[2].lambda_calc, s.report.per_run[2].lambda_calc));
  }
}

TEST_CASE("report JSON rejects foreign documents") {
  CHECK_THROWS_AS(report_from_json(nlohmann::json::object()), InputError);
  CHECK_THROWS_AS(report_from_json(nlohmann::json{{"format", "bellcal-calibration-report"}, {"version", 1}}),
                  InputError);
}

TEST_CASE("number lists") {
  CHECK(parse_number_list("2.625, 2.6,2") == std::vector<double>{2.625, 2.6, 2.0});
  CHECK_THROWS_AS(parse_number_list("2.6,,2"), InputError);
  CHECK_THROWS_AS(parse_number_list("x"), InputError);
  CHECK_THROWS_AS(parse_number_list("0x1p3"), InputError);
}
