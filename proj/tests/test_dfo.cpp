#include <cmath>
#include <limits>

#include "doctest.h"
#include "sdnioc/dfo.hpp"

using namespace sdnioc;

TEST_CASE("quadratic bowl converges to the interior minimum") {
  dvec c(3);
  c << 0.3, -0.2, 0.5;
  auto f = [&](const dvec& x) {
    const dvec d = x - c;
    return d(0) * d(0) + 2.0 * d(1) * d(1) + 0.5 * d(2) * d(2) + d(0) * d(1);
  };
  const dvec lo = dvec::Constant(3, -1.0);
  const dvec hi = dvec::Constant(3, 1.0);
  DfoResult res = minimize_dfo(f, dvec::Zero(3), lo, hi, {});
  CHECK(res.converged);
  CHECK(res.f < 1e-8);
  CHECK((res.x - c).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(res.evals <= 500);
}

TEST_CASE("rosenbrock in two dimensions reaches the valley floor") {
  auto f = [](const dvec& x) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    return a * a + 100.0 * b * b;
  };
  dvec x0(2);
  x0 << -1.2, 1.0;
  const dvec lo = dvec::Constant(2, -2.0);
  const dvec hi = dvec::Constant(2, 2.0);
  DfoOptions opts;
  opts.max_evals = 500;
  DfoResult res = minimize_dfo(f, x0, lo, hi, opts);
  CHECK(res.f <= 1e-6);
  CHECK(res.evals <= 500);
}

TEST_CASE("boundary minimum is found") {
  auto f = [](const dvec& x) { return (x(0) - 2.0) * (x(0) - 2.0); };
  const dvec lo = dvec::Constant(1, -1.0);
  const dvec hi = dvec::Constant(1, 1.0);
  DfoResult res = minimize_dfo(f, dvec::Zero(1), lo, hi, {});
  CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(res.x(0) <= 1.0);
  CHECK(res.x(0) >= -1.0);
}

TEST_CASE("constant objective converges without leaving the box") {
  auto f = [](const dvec&) { return 3.5; };
  const dvec lo = dvec::Constant(2, -1.0);
  const dvec hi = dvec::Constant(2, 1.0);
  DfoResult res = minimize_dfo(f, dvec::Zero(2), lo, hi, {});
  CHECK(res.converged);
  CHECK(res.f == 3.5);
  CHECK((res.x.array() >= -1.0).all());
  CHECK((res.x.array() <= 1.0).all());
}

TEST_CASE("non-finite objective values do not derail the search") {
  // The pit returns +inf near the corner; the minimizer must still find the
  // smooth minimum at the origin.
  auto f = [](const dvec& x) {
    if (x(0) > 0.8 && x(1) > 0.8) return std::numeric_limits<double>::infinity();
    return x.squaredNorm();
  };
  dvec x0(2);
  x0 << 0.9, 0.9;
  const dvec lo = dvec::Constant(2, -1.0);
  const dvec hi = dvec::Constant(2, 1.0);
  DfoResult res = minimize_dfo(f, x0, lo, hi, {});
  CHECK(res.f < 1e-6);
}

TEST_CASE("bad arguments are rejected") {
  auto f = [](const dvec& x) { return x.squaredNorm(); };
  const dvec lo = dvec::Constant(2, -1.0);
  const dvec hi = dvec::Constant(2, 1.0);

  SUBCASE("start outside the box") {
    CHECK_THROWS_AS(minimize_dfo(f, dvec::Constant(2, 5.0), lo, hi, {}),
                    std::invalid_argument);
  }
  SUBCASE("inverted bounds") {
    CHECK_THROWS_AS(minimize_dfo(f, dvec::Zero(2), hi, lo, {}), std::invalid_argument);
  }
  SUBCASE("budget too small to fit anything") {
    DfoOptions opts;
    opts.max_evals = 2;
    CHECK_THROWS_AS(minimize_dfo(f, dvec::Zero(2), lo, hi, opts), std::invalid_argument);
  }
}

TEST_CASE("capped interpolation set still solves a bowl") {
  // max_points = 2n + 1 mirrors the classic economical configuration.
  const auto f = [](const dvec& x) { return (x.array() - 0.3).square().sum(); };
  dvec lo = dvec::Zero(3), hi = dvec::Ones(3);
  dvec x0 = dvec::Constant(3, 0.9);
  DfoOptions opts;
  opts.max_points = 7;
  DfoResult res = minimize_dfo(f, x0, lo, hi, opts);
  CHECK(res.converged);
  CHECK((res.x.array() - 0.3).abs().maxCoeff() < 1e-4);
}
