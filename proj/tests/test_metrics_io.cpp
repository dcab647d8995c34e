#include <doctest.h>

#include <cmath>

#include "cfm/metrics.hpp"
#include "cfm/solvers.hpp"

using namespace cfm;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("psnr formula") {
  SpaceElement x0 = SpaceElement::from_vector(Eigen::VectorXd::Constant(1, 0.5));
  CHECK(std::isinf(psnr(x0, x0)));

  SpaceElement x = SpaceElement::from_vector(Eigen::VectorXd::Constant(1, 0.6));
  CHECK(psnr(x, x0) == doctest::Approx(20.0).epsilon(1e-12));  // 20 log10(1/0.1)

  SpaceElement x2 = SpaceElement::from_vector(Eigen::VectorXd::Constant(1, 0.7));
  CHECK(psnr(x, x0) - psnr(x2, x0) == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-9));

  SpaceElement other = SpaceElement::zeros(Space::real(2));
  CHECK_THROWS_AS(psnr(x, other), DimensionError);
}

TEST_CASE("trace csv uses the pinned schema and full precision") {
  Trace t;
  TraceRow r;
  r.iter = 1;
  r.phi = 1.0 / 3.0;
  r.L = 2.0;
  r.theta = 0.5;
  r.backtracks = 2;
  r.fwd = 3;
  r.adj = 4;
  r.prox = 5;
  r.err = 0.25;
  t.rows.push_back(r);
  const std::string csv = t.to_csv();
  CHECK(csv.rfind("iter,phi,L,theta,backtracks,fwd,adj,prox,err\n", 0) == 0);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);
  CHECK(csv.find("1,0.33333333333333331,2,0.5,2,3,4,5,0.25") != std::string::npos);
}

TEST_CASE("trace json carries rows and restarts") {
  Trace t;
  t.rows.push_back(TraceRow{});
  t.restarts.push_back(100);
  const std::string js = t.to_json();
  CHECK(js.find("\"schema\":\"cfm/1\"") != std::string::npos);
  CHECK(js.find("\"restarts\":[100]") != std::string::npos);
  CHECK(js.find("\"phi\":null") != std::string::npos);  // NaN serialized as null
}

TEST_SUITE_END();
