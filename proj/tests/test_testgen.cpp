#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cfm/continuation.hpp"
#include "cfm/random.hpp"
#include "cfm/smoothing.hpp"
#include "cfm/testgen.hpp"

using namespace cfm;

namespace {

bool reports_equal(const KktReport& a, const KktReport& b) {
  return a.primal_residual == b.primal_residual &&
         a.dual_feasibility_residual == b.dual_feasibility_residual &&
         a.support_sign_residual == b.support_sign_residual &&
         a.offsupport_margin == b.offsupport_margin &&
         a.strong_duality_residual == b.strong_duality_residual &&
         a.complementarity_residual == b.complementarity_residual &&
         a.stationarity_residual == b.stationarity_residual && a.max_residual == b.max_residual;
}

}  // namespace

TEST_SUITE_BEGIN("testgen");

TEST_CASE("sparse signal generator construction identities") {
  CHECK(gen_sparse_signal(10, 0, 40.0, 1).isZero(0.0));

  Eigen::VectorXd flat = gen_sparse_signal(12, 4, 0.0, 2);
  int nnz = 0;
  for (Index i = 0; i < flat.size(); ++i) {
    if (flat[i] != 0.0) {
      ++nnz;
      CHECK(std::abs(flat[i]) == 1.0);  // zero range: all magnitudes equal
    }
  }
  CHECK(nnz == 4);

  Eigen::VectorXd x = gen_sparse_signal(64, 5, 60.0, 3);
  double lo = 1e300, hi = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      lo = std::min(lo, std::abs(x[i]));
      hi = std::max(hi, std::abs(x[i]));
    }
  }
  CHECK(std::abs(hi / lo - 1000.0) <= 1e-9);

  CHECK(gen_sparse_signal(64, 5, 60.0, 3) == x);  // determinism under seed
}

TEST_CASE("basis pursuit certificates are exact") {
  auto rng = make_rng(81);
  Eigen::MatrixXd a = gaussian_matrix(12, 30, rng) / std::sqrt(12.0);
  Eigen::VectorXd xt = gen_sparse_signal(30, 4, 20.0, 121);
  ExactInstance inst = gen_basis_pursuit_exact(a, xt);

  CHECK(inst.kkt.max_residual <= 1e-10);
  CHECK(inst.kkt.offsupport_margin > 1e-8);
  CHECK((inst.d.array() - 1.0).abs().maxCoeff() <= 0.05);

  int support = 0;
  for (Index i = 0; i < inst.x_star.size(); ++i)
    if (inst.x_star[i] != 0.0) ++support;
  CHECK(support <= int(a.rows()));

  // Re-certification is bit-identical.
  CHECK(reports_equal(certify(inst), inst.kkt));
  CHECK(reports_equal(certify(inst), certify(inst)));

  // Determinism of the full generation.
  ExactInstance again = gen_basis_pursuit_exact(a, xt);
  CHECK(again.x_star == inst.x_star);
  CHECK(again.lambda_star == inst.lambda_star);
}

TEST_CASE("lasso certificates satisfy the construction identities") {
  auto rng = make_rng(82);
  Eigen::MatrixXd a = gaussian_matrix(10, 24, rng) / std::sqrt(10.0);
  Eigen::VectorXd xt = gen_sparse_signal(24, 3, 15.0, 123);
  const double eps = 0.08 * (a * xt).norm();
  ExactInstance inst = gen_lasso_exact(a, xt, eps, {});

  CHECK(std::abs((inst.b - inst.A * inst.x_star).norm() - eps) <= 1e-12 * std::max(1.0, eps));
  CHECK(inst.kkt.max_residual <= 1e-10);

  // The stored pair has a vanishing duality gap on the conic model. The
  // reduced dual variable of the listing convention is -lambda.
  ModelSpec spec = instance_spec(inst);
  GapReport gap = duality_gap(conic_model(spec), SpaceElement::from_vector(inst.x_star),
                              SpaceElement::from_vector((-inst.lambda_star).eval()));
  CHECK(gap.dual_feasible);
  CHECK(std::abs(gap.gap) <= 1e-10 * std::max(1.0, std::abs(gap.primal_value)));
}

TEST_CASE("solving a lasso instance recovers its certificate") {
  auto rng = make_rng(83);
  Eigen::MatrixXd a = gaussian_matrix(10, 24, rng) / std::sqrt(10.0);
  Eigen::VectorXd xt = gen_sparse_signal(24, 3, 12.0, 125);
  ExactInstance inst = gen_lasso_exact(a, xt, 0.08 * (a * xt).norm(), {});

  ModelSpec spec = instance_spec(inst);
  spec.mu = default_mu(spec);
  ContinuationOptions copts;
  copts.mu_factor = 1.0;
  copts.inner_tol0 = 1e-5;
  copts.tol_factor = 2.0;
  copts.final_tol = 1e-12;
  copts.max_outer = 50;
  copts.outer_tol = 1e-12;
  copts.solver.restart_interval = 100;
  copts.solver.max_iters = 30000;
  copts.solver.trace_phi = false;
  ContinuationResult res = continue_standard(spec, copts);
  CHECK((res.x.data - inst.x_star).norm() <= 1e-6 * inst.x_star.norm());
}

TEST_CASE("dantzig certificates: smoothed KKT, slack shortcut, solver recovery") {
  auto rng = make_rng(84);
  Eigen::MatrixXd a = gaussian_matrix(10, 28, rng) / std::sqrt(10.0);
  Eigen::VectorXd xt = gen_sparse_signal(28, 4, 20.0, 127);
  const Eigen::VectorXd b = a * xt;
  const double delta = 0.1 * (a.transpose() * b).lpNorm<Eigen::Infinity>();
  ExactInstance inst = gen_dantzig_exact(a, xt, delta, 0.1);

  CHECK(inst.kkt.max_residual <= 1e-10);
  CHECK(reports_equal(certify(inst), inst.kkt));
  CHECK((inst.d.array() - 1.0).abs().maxCoeff() <= 0.05);
  CHECK(inst.x_star_unsmoothed.size() == 28);

  // Solving the smoothed instance at its own (mu, x0) reproduces x_star.
  ModelSpec spec = instance_spec(inst);
  SolverOptions o;
  o.variant = Variant::AT;
  o.restart_interval = 100;
  o.tol = 1e-12;
  o.max_iters = 60000;
  o.trace_phi = false;
  SolveResult res = solve(build(spec), o, SpaceElement::zeros(Space::real(28)));
  CHECK((res.x.data - inst.x_star).norm() <= 1e-6 * inst.x_star.norm());

  // Slack delta: the zero certificate.
  const double big_delta = (a.transpose() * b).lpNorm<Eigen::Infinity>() * 1.5;
  ExactInstance zero = gen_dantzig_exact(a, xt, big_delta, 0.1);
  CHECK(zero.x_star.isZero(0.0));
  CHECK(zero.kkt.max_residual == 0.0);
}

TEST_CASE("instance bundles round-trip and re-certify") {
  auto rng = make_rng(85);
  Eigen::MatrixXd a = gaussian_matrix(8, 18, rng) / std::sqrt(8.0);
  Eigen::VectorXd xt = gen_sparse_signal(18, 3, 10.0, 129);
  ExactInstance inst = gen_basis_pursuit_exact(a, xt);

  const auto path = (std::filesystem::temp_directory_path() / "cfm_instance.json").string();
  save_instance_json(path, inst);
  ExactInstance loaded = load_instance_json(path);
  std::filesystem::remove(path);

  CHECK(loaded.kind == inst.kind);
  CHECK(loaded.A == inst.A);
  CHECK(loaded.x_star == inst.x_star);
  CHECK(reports_equal(certify(loaded), inst.kkt));
}

TEST_SUITE_END();
