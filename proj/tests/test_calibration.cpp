#include <cmath>
#include <random>

#include "doctest.h"

#include "bellcal/calibration.hpp"
#include "bellcal/errors.hpp"
#include "paper_data.hpp"

using namespace bellcal;
using doctest::Approx;

namespace {

double ssr(std::span<const LambdaPoint> pts, double a, double b) {
  double s = 0.0;
  for (const auto& p : pts) s += std::pow(p.bell - (a * p.lambda_mean + b), 2);
  return s;
}

}  // namespace

TEST_CASE("estimate_eta") {
  const auto runs = testdata::chsh_runs();
  CHECK(std::abs(estimate_eta(runs) - testdata::kEta) < 2e-4);
  // per-run averaging is a different estimator and lands slightly higher
  CHECK(estimate_eta_row_mean(runs) == Approx(0.11354).epsilon(1e-4));

  CHECK(estimate_eta(std::vector<ExperimentRun>{{1, 100, 200, 1.0}}) == 0.5);
  CHECK(estimate_eta(std::vector<ExperimentRun>{{1, 100, 0, 1.0}}) == 1.0);

  CHECK_THROWS_AS(estimate_eta(std::vector<ExperimentRun>{}), CalibrationError);
  CHECK_THROWS_AS(estimate_eta(std::vector<ExperimentRun>{{1, 0, 10, 1.0}}), CalibrationError);
}

TEST_CASE("estimate_eta is scale invariant") {
  auto runs = testdata::chsh_runs();
  const double base = estimate_eta(runs);
  for (auto& r : runs) {
    r.doubles_observed *= 3;
    r.singles_observed *= 3;
  }
  CHECK(estimate_eta(runs) == Approx(base).epsilon(1e-15));
}

TEST_CASE("solve_lambda_from_counts on published rows") {
  const auto runs = testdata::chsh_runs();
  const double eta = testdata::kEta;
  CHECK(solve_lambda_from_counts(runs[6], eta, 8e7) == Approx(0.0036).epsilon(0.0002 / 0.0036));
  CHECK(std::abs(solve_lambda_from_counts(runs[0], eta, 8e7) - 0.0649) < 2e-4);

  ExperimentRun empty{9, 0, 0, 10.0};
  CHECK(solve_lambda_from_counts(empty, eta, 8e7) == 0.0);
}

TEST_CASE("lambda inversion round trip") {
  const TruncationPolicy policy;
  for (double eta : {0.011, 0.05, 0.1134, 0.5, 0.87, 1.0}) {
    for (double lambda : {0.0, 1e-4, 0.0036, 0.0849, 0.3, 0.75, 1.0}) {
      for (double t : {10.0, 1e4}) {
        CAPTURE(eta);
        CAPTURE(lambda);
        CAPTURE(t);
        const double c = expected_doubles_count({eta, lambda, 8e7}, t, policy);
        const double back = solve_lambda_for_doubles(c, t, eta, 8e7, policy, 1e-10);
        CHECK(std::abs(back - lambda) < 1e-8);
      }
    }
  }
}

TEST_CASE("lambda recovery errors") {
  // more doubles than pulses cannot be reached at any lambda
  CHECK_THROWS_AS(solve_lambda_for_doubles(9e8, 10.0, 0.5, 8e7), DivergenceError);
  CHECK_THROWS_AS(solve_lambda_for_doubles(10.0, 10.0, 0.0, 8e7), DomainError);
  CHECK_THROWS_AS(solve_lambda_for_doubles(10.0, 10.0, 0.5, 8e7, {}, 0.0), DomainError);
}

TEST_CASE("fit_linear") {
  SUBCASE("exact line") {
    const std::vector<LambdaPoint> pts{{0.0, 2.0}, {1.0, 1.0}};
    const auto fit = fit_linear(pts);
    CHECK(fit.slope_a == Approx(-1.0));
    CHECK(fit.intercept_b == Approx(2.0));
    CHECK(fit.rmse == Approx(0.0));
  }
  SUBCASE("degenerate") {
    CHECK_THROWS_AS(fit_linear(std::vector<LambdaPoint>{{0.1, 2.0}}), DegenerateFitError);
    CHECK_THROWS_AS(fit_linear(std::vector<LambdaPoint>{{0.1, 2.0}, {0.1, 2.1}}), DegenerateFitError);
    CHECK_THROWS_AS(fit_linear(std::vector<LambdaPoint>{}), DegenerateFitError);
  }
  SUBCASE("rmse uses divisor n") {
    const std::vector<LambdaPoint> pts{{0.0, 0.0}, {1.0, 2.0}, {2.0, 2.0}};
    const auto fit = fit_linear(pts);
    // residuals -1/3, 2/3, -1/3
    CHECK(fit.rmse == Approx(std::sqrt((1.0 / 9 + 4.0 / 9 + 1.0 / 9) / 3.0)));
  }
}

TEST_CASE("fit is a least-squares optimum on the published data") {
  const auto runs = testdata::chsh_runs();
  std::vector<LambdaPoint> pts;
  for (const auto& r : runs) pts.push_back({solve_lambda_from_counts(r, estimate_eta(runs), 8e7), *r.bell_observed});
  const auto fit = fit_linear(pts);
  const double best = ssr(pts, fit.slope_a, fit.intercept_b);
  for (int da = -1; da <= 1; ++da) {
    for (int db = -1; db <= 1; ++db) {
      if (da == 0 && db == 0) continue;
      CHECK(ssr(pts, fit.slope_a + da * 1e-3, fit.intercept_b + db * 1e-3) >= best);
    }
  }
}

TEST_CASE("to_physical") {
  const auto chsh = BellCertificate::chsh();
  const auto fit = to_physical(testdata::kSlopeA, testdata::kInterceptB, testdata::kEta, chsh);
  CHECK(fit.xi_used == Approx(1.98714).epsilon(1e-5));
  CHECK(fit.alpha == Approx(0.6020).epsilon(1e-4 / 0.6020));
  CHECK(fit.beta == Approx(-1.0558).epsilon(1e-4 / 1.0558));

  SUBCASE("zero slope") {
    const auto f = to_physical(0.0, chsh.tsirelson_bound, 0.3, chsh);
    CHECK(f.alpha == 0.0);
    CHECK(f.beta == Approx(-chsh.tsirelson_bound));
    CHECK(f.alpha * chsh.tsirelson_bound - f.beta == Approx(chsh.tsirelson_bound));
  }
  SUBCASE("linear in slope") {
    const auto f2 = to_physical(2.0 * testdata::kSlopeA, testdata::kInterceptB, testdata::kEta, chsh);
    CHECK(f2.alpha == Approx(2.0 * fit.alpha).epsilon(1e-15));
  }
  SUBCASE("round trip on random inputs") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> slope(-5.0, 0.0), icpt(1.0, 3.0), eff(0.01, 1.0);
    for (int i = 0; i < 200; ++i) {
      const double a = slope(rng), b = icpt(rng), eta = eff(rng);
      const auto f = to_physical(a, b, eta, chsh);
      CHECK(std::abs(-f.alpha * chsh.tsirelson_bound * f.xi_used / 2.0 - a) < 1e-12);
      CHECK(std::abs(f.alpha * chsh.tsirelson_bound - f.beta - b) < 1e-12);
    }
  }
  SUBCASE("nonzero-trace operator") {
    auto cert = chsh;
    cert.trace_zero = false;
    CHECK_THROWS_AS(to_physical(-1.0, 2.7, 0.1, cert), ModelAssumptionError);
  }
}

TEST_CASE("calibrate reproduces the published pipeline") {
  const auto runs = testdata::chsh_runs();
  const auto report = calibrate(runs, BellCertificate::chsh());
  CHECK(std::abs(report.eta_hat - testdata::kEta) < 2e-4);
  CHECK(std::abs(report.fit.slope_a - testdata::kSlopeA) < 0.01);
  CHECK(std::abs(report.fit.intercept_b - testdata::kInterceptB) < 0.002);
  CHECK(std::abs(report.fit.rmse - testdata::kRmse) < 5e-4);
  REQUIRE(report.per_run.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(report.per_run[i].run_id == static_cast<std::int64_t>(i + 1));
    CHECK(std::abs(report.per_run[i].lambda_calc - testdata::kLambdaCalc[i]) < 2e-4);
    CHECK(std::abs(report.per_run[i].bell_linear_fit - testdata::kBellCalc[i]) < 5e-4);
  }
}

TEST_CASE("calibrate orders runs by id") {
  auto runs = testdata::chsh_runs();
  std::reverse(runs.begin(), runs.end());
  const auto report = calibrate(runs, BellCertificate::chsh());
  for (std::size_t i = 0; i < report.per_run.size(); ++i) {
    CHECK(report.per_run[i].run_id == static_cast<std::int64_t>(i + 1));
  }
  CHECK(report.fit.slope_a == Approx(calibrate(testdata::chsh_runs(), BellCertificate::chsh()).fit.slope_a));
}

TEST_CASE("calibrate recovers synthetic generators") {
  const double eta = 0.2, a = -1.2, b = 2.7;
  const TruncationPolicy policy;
  std::vector<ExperimentRun> runs;
  std::int64_t id = 1;
  for (double lambda : {0.005, 0.01, 0.02, 0.04, 0.08}) {
    const double t = 1000.0;
    const auto c = static_cast<std::uint64_t>(std::llround(expected_doubles_count({eta, lambda}, t, policy)));
    // singles chosen so the first-order estimator returns exactly eta
    const auto s = static_cast<std::uint64_t>(std::llround(static_cast<double>(c) * 2.0 * (1.0 - eta) / eta));
    runs.push_back({id++, c, s, t, a * lambda + b});
  }
  const auto report = calibrate(runs, BellCertificate::chsh());
  CHECK(report.eta_hat == Approx(eta).epsilon(1e-7));
  CHECK(report.fit.slope_a == Approx(a).epsilon(1e-4));
  CHECK(report.fit.intercept_b == Approx(b).epsilon(1e-6));
  CHECK(report.fit.rmse < 1e-6);
}

TEST_CASE("calibrate errors") {
  const auto runs = testdata::chsh_runs();
  CHECK_THROWS_AS(calibrate(std::span(runs).first(1), BellCertificate::chsh()), DegenerateFitError);
  auto missing = runs;
  missing[2].bell_observed.reset();
  CHECK_THROWS_AS(calibrate(missing, BellCertificate::chsh()), CalibrationError);
  auto bad = runs;
  bad[0].duration_s = 0.0;
  CHECK_THROWS_AS(calibrate(bad, BellCertificate::chsh()), InputError);
}
