#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "specband/optim.hpp"

#include <cmath>
#include <limits>

using namespace specband;

TEST_CASE("nelder_mead: quadratic bowl from several starts") {
  const std::vector<double> center{1.5, -2.0, 0.25, 3.0};
  auto quad = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
    return s;
  };

  for (std::vector<double> x0 :
       {std::vector<double>{0, 0, 0, 0}, std::vector<double>{5, 5, 5, 5},
        std::vector<double>{-3, 4, 1, -1}}) {
    NmConfig cfg;
    cfg.max_evaluations = 500;
    NmResult res = nelder_mead(quad, x0, cfg);
    REQUIRE(res.evaluations <= 500);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::fabs(res.x[i] - center[i]) < 1e-4);
  }
}

TEST_CASE("nelder_mead: constant objective converges by shrinkage") {
  auto flat = [](const std::vector<double>&) { return 7.0; };
  NmConfig cfg;
  cfg.max_evaluations = 5000;
  cfg.tol = 1e-6;
  NmResult res = nelder_mead(flat, {1.0, 2.0}, cfg);
  CHECK(res.value == 7.0);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(0.2));
  CHECK(res.evaluations < 5000);  // diameter test fired before the budget
}

TEST_CASE("nelder_mead: Rosenbrock from the classic start") {
  auto rosen = [](const std::vector<double>& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  NmConfig cfg;
  cfg.max_evaluations = 2000;
  NmResult res = nelder_mead(rosen, {-1.2, 1.0}, cfg);
  CHECK(res.value < 1e-3);
  CHECK(std::fabs(res.x[0] - 1.0) < 0.1);
  CHECK(std::fabs(res.x[1] - 1.0) < 0.1);
}

TEST_CASE("nelder_mead: non-finite values are treated as +inf, never abort") {
  auto holey = [](const std::vector<double>& x) {
    if (x[0] > 0.5 && x[0] < 0.7) return std::numeric_limits<double>::quiet_NaN();
    return (x[0] - 1.0) * (x[0] - 1.0) + x[1] * x[1];
  };
  NmConfig cfg;
  cfg.max_evaluations = 1500;
  // The NaN strip walls off the true minimum; the search must finish with
  // a finite value on the reachable side instead of aborting.
  NmResult res = nelder_mead(holey, {-0.5, 0.4}, cfg);
  CHECK(std::isfinite(res.value));
  CHECK(res.value <= 0.3);
  CHECK(res.x[0] <= 0.5);

  // Start point must be finite though.
  auto bad = [](const std::vector<double>&) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS(nelder_mead(bad, {0.0}, cfg));
}

TEST_CASE("nelder_mead: incumbent value never increases across calls with larger budgets") {
  auto f = [](const std::vector<double>& x) {
    return std::sin(3 * x[0]) + x[0] * x[0] * 0.5 + (x[1] - 1) * (x[1] - 1);
  };
  double prev = std::numeric_limits<double>::infinity();
  for (int evals : {20, 50, 100, 400}) {
    NmConfig cfg;
    cfg.max_evaluations = evals;
    NmResult res = nelder_mead(f, {2.0, -2.0}, cfg);
    CHECK(res.value <= prev + 1e-12);
    prev = res.value;
  }
}
