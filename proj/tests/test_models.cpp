#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cfm/continuation.hpp"
#include "cfm/models.hpp"
#include "cfm/random.hpp"
#include "cfm/solvers.hpp"
#include "cfm/testgen.hpp"

using namespace cfm;

namespace {

SolveResult tight_solve(const CompositeDual& cd, int iters = 60000, double tol = 1e-12) {
  SolverOptions o;
  o.variant = Variant::AT;
  o.restart_interval = 100;
  o.max_iters = iters;
  o.tol = tol;
  o.trace_phi = false;
  return solve(cd, o, SpaceElement::zeros(cd.domain()));
}

// Re-centered continuation at fixed mu, killing the smoothing bias.
SpaceElement exact_solve(const ModelSpec& spec) {
  ContinuationOptions copts;
  copts.mu_factor = 1.0;
  copts.inner_tol0 = 1e-6;
  copts.tol_factor = 2.0;
  copts.final_tol = 1e-12;
  copts.max_outer = 40;
  copts.outer_tol = 1e-11;
  copts.solver.restart_interval = 100;
  copts.solver.max_iters = 40000;
  copts.solver.trace_phi = false;
  return continue_standard(spec, copts).x;
}

}  // namespace

TEST_SUITE_BEGIN("models");

TEST_CASE("dantzig with a slack bound returns zero") {
  auto rng = make_rng(51);
  Eigen::MatrixXd a = gaussian_matrix(4, 8, rng);
  Eigen::VectorXd y = gaussian_vector(4, rng);
  ModelSpec spec;
  spec.kind = ModelKind::Dantzig;
  spec.A = make_dense(a);
  spec.y = SpaceElement::from_vector(y);
  spec.delta = (a.transpose() * y).lpNorm<Eigen::Infinity>() * 1.01;
  spec.mu = 0.5;
  SolveResult res = tight_solve(build(spec), 5000);
  CHECK(res.x.data.isZero(0.0));
}

TEST_CASE("norm-form and LP-form Dantzig agree at the optimum") {
  auto rng = make_rng(52);
  Eigen::MatrixXd a = gaussian_matrix(6, 12, rng) / std::sqrt(6.0);
  Eigen::VectorXd y = a * gen_sparse_signal(12, 3, 15.0, 99);
  ModelSpec norm_form;
  norm_form.kind = ModelKind::Dantzig;
  norm_form.A = make_dense(a);
  norm_form.y = SpaceElement::from_vector(y);
  norm_form.delta = 0.1 * (a.transpose() * y).lpNorm<Eigen::Infinity>();
  norm_form.mu = 0.3;

  ModelSpec lp_form = norm_form;
  lp_form.kind = ModelKind::DantzigLp;

  CompositeDual cd_lp = build(lp_form);
  CHECK(std::isfinite(cd_lp.h()->value(SpaceElement::zeros(cd_lp.domain()))));  // 0 is feasible

  SolveResult rn = tight_solve(build(norm_form));
  SolveResult rl = tight_solve(cd_lp, 120000);
  CHECK((rn.x.data - rl.x.data).norm() <= 1e-4 * std::max(1.0, rn.x.data.norm()));

  // lambda_1 - lambda_2 corresponds to the norm-form dual variable.
  Eigen::VectorXd zbar = rl.z.data.head(12) - rl.z.data.tail(12);
  CHECK((zbar - rn.z.data).norm() <= 1e-4 * std::max(1.0, rn.z.data.norm()));
}

TEST_CASE("lasso with a slack epsilon returns zero") {
  auto rng = make_rng(53);
  Eigen::MatrixXd a = gaussian_matrix(4, 8, rng);
  Eigen::VectorXd y = gaussian_vector(4, rng);
  ModelSpec spec;
  spec.kind = ModelKind::Lasso;
  spec.A = make_dense(a);
  spec.y = SpaceElement::from_vector(y);
  spec.epsilon = y.norm() * 1.01;
  spec.mu = 0.5;
  SolveResult res = tight_solve(build(spec), 5000);
  CHECK(res.x.data.isZero(0.0));
}

TEST_CASE("basis pursuit recovers a certified instance with continuation") {
  auto rng = make_rng(54);
  Eigen::MatrixXd a = gaussian_matrix(10, 24, rng) / std::sqrt(10.0);
  Eigen::VectorXd xt = gen_sparse_signal(24, 3, 12.0, 101);
  ExactInstance inst = gen_basis_pursuit_exact(a, xt);

  ModelSpec spec = instance_spec(inst);
  spec.mu = default_mu(spec);
  ContinuationOptions copts;
  copts.mu_factor = 1.0;
  copts.inner_tol0 = 1e-5;
  copts.tol_factor = 2.0;
  copts.final_tol = 1e-12;
  copts.max_outer = 40;
  copts.outer_tol = 1e-12;
  copts.solver.restart_interval = 100;
  copts.solver.max_iters = 20000;
  copts.solver.trace_phi = false;
  ContinuationResult res = continue_standard(spec, copts);
  CHECK((res.x.data - inst.x_star).norm() <= 1e-6 * inst.x_star.norm());
}

TEST_CASE("nuclear lasso with full sampling recovers the matrix") {
  ModelSpec spec;
  spec.kind = ModelKind::NuclearLasso;
  spec.A = make_reshape(Space::matrix(2, 2), Space::real(4));
  Eigen::MatrixXd m = Eigen::Vector2d(3, 1).asDiagonal();
  spec.y = SpaceElement::from_vector(Eigen::Map<const Eigen::VectorXd>(m.data(), 4));
  spec.epsilon = 1e-8;
  spec.mu = 0.05;
  SolveResult res = tight_solve(build(spec), 20000);
  CHECK((res.x.as_matrix() - m).norm() <= 1e-3);

  // Zero data gives the zero matrix.
  ModelSpec zero = spec;
  zero.y = SpaceElement::zeros(Space::real(4));
  zero.epsilon = 0.5;
  SolveResult rz = tight_solve(build(zero), 2000);
  CHECK(rz.x.data.isZero(0.0));
}

TEST_CASE("rank-1 completion from 80 percent of the entries") {
  // Not every 20-entry pattern of a 5x5 matrix admits exact completion; this
  // seed gives one that does (recovery verified when the test was pinned).
  auto rng = make_rng(56);
  Eigen::VectorXd u = gaussian_vector(5, rng), v = gaussian_vector(5, rng);
  Eigen::MatrixXd m = u * v.transpose();
  std::vector<std::pair<Index, Index>> entries;
  for (Index f : sample_without_replacement(25, 20, rng)) entries.emplace_back(f % 5, f / 5);
  ModelSpec spec;
  spec.kind = ModelKind::NuclearLasso;
  spec.A = make_subsample(entries, 5, 5);
  spec.y = spec.A.forward(SpaceElement::from_matrix(m));
  spec.epsilon = 0.0;  // equality-constrained completion
  spec.mu = 1e-3;
  ContinuationOptions copts;
  copts.mu_factor = 1.0;
  copts.inner_tol0 = 1e-6;
  copts.final_tol = 1e-11;
  copts.max_outer = 30;
  copts.outer_tol = 1e-10;
  copts.solver.max_iters = 6000;
  copts.solver.trace_phi = false;
  ContinuationResult res = continue_standard(spec, copts);
  CHECK((res.x.as_matrix() - m).norm() <= 1e-3 * m.norm());
}

TEST_CASE("l1-analysis with W = I matches the lasso") {
  auto rng = make_rng(56);
  Eigen::MatrixXd a = gaussian_matrix(8, 16, rng) / std::sqrt(8.0);
  Eigen::VectorXd y = a * gen_sparse_signal(16, 4, 15.0, 103);
  ModelSpec lasso;
  lasso.kind = ModelKind::Lasso;
  lasso.A = make_dense(a);
  lasso.y = SpaceElement::from_vector(y);
  lasso.epsilon = 0.1 * y.norm();
  lasso.mu = 0.2;

  ModelSpec analysis = lasso;
  analysis.kind = ModelKind::L1Analysis;
  analysis.W = make_identity(Space::real(16));

  SolveResult rl = tight_solve(build(lasso));
  SolveResult ra = tight_solve(build(analysis));
  CHECK((rl.x.data - ra.x.data).norm() <= 1e-5 * std::max(1.0, rl.x.data.norm()));
}

TEST_CASE("analysis with zero data and zero epsilon returns zero") {
  ModelSpec spec;
  spec.kind = ModelKind::L1Analysis;
  spec.A = make_identity(Space::real(6));
  spec.W = make_identity(Space::real(6));
  spec.y = SpaceElement::zeros(Space::real(6));
  spec.epsilon = 0.0;
  spec.mu = 1.0;
  SolveResult res = tight_solve(build(spec), 2000);
  CHECK(res.x.data.norm() <= 1e-10);
}

TEST_CASE("TV of a constant image is zero so denoising returns the data") {
  const Index n = 4;
  ModelSpec spec;
  spec.kind = ModelKind::Tv;
  spec.A = make_identity(Space::matrix(n, n));
  Eigen::MatrixXd img = Eigen::MatrixXd::Constant(n, n, 2.5);
  spec.y = SpaceElement::from_matrix(img);
  spec.epsilon = 0.0;
  spec.mu = 0.5;
  SolveResult res = tight_solve(build(spec), 4000);
  CHECK((res.x.as_matrix() - img).norm() <= 1e-8);
}

TEST_CASE("TV denoising reduces total variation while staying feasible") {
  auto rng = make_rng(57);
  const Index n = 4;
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(n, n);
  img.block(0, 0, 2, 2).setConstant(1.0);  // piecewise constant
  Eigen::MatrixXd noise = 0.05 * gaussian_matrix(n, n, rng);
  Eigen::MatrixXd noisy = img + noise;

  ModelSpec spec;
  spec.kind = ModelKind::Tv;
  spec.A = make_identity(Space::matrix(n, n));
  spec.y = SpaceElement::from_matrix(noisy);
  spec.epsilon = noise.norm();
  spec.mu = 0.05;
  SolveResult res = tight_solve(build(spec), 20000);

  const double tv_noisy = objective_value(spec, spec.y);
  const double tv_denoised = objective_value(spec, res.x);
  CHECK(tv_denoised < tv_noisy);
  CHECK(feasibility(spec, res.x).residual <= spec.epsilon * (1.0 + 1e-6));
}

TEST_CASE("combined model with zero TV weight matches plain analysis") {
  auto rng = make_rng(58);
  const Index n = 5;
  Eigen::MatrixXd img = gaussian_matrix(n, n, rng);
  ModelSpec analysis;
  analysis.kind = ModelKind::L1Analysis;
  analysis.A = make_identity(Space::matrix(n, n));
  analysis.W = make_reshape(Space::matrix(n, n), Space::real(n * n));
  analysis.y = SpaceElement::from_matrix(img);
  analysis.epsilon = 0.3;
  analysis.mu = 0.4;

  ModelSpec combined = analysis;
  combined.kind = ModelKind::AnalysisPlusTv;
  combined.alpha_w = 1.0;
  combined.beta_tv = 0.0;

  SolveResult ra = tight_solve(build(analysis), 30000);
  SolveResult rc = tight_solve(build(combined), 30000);
  CHECK((ra.x.data - rc.x.data).norm() <= 1e-6 * std::max(1.0, ra.x.data.norm()));
}

TEST_CASE("feasibility invariants hold at convergence") {
  auto rng = make_rng(59);
  Eigen::MatrixXd a = gaussian_matrix(6, 12, rng) / std::sqrt(6.0);
  Eigen::VectorXd y = a * gen_sparse_signal(12, 3, 10.0, 105);

  ModelSpec dantzig;
  dantzig.kind = ModelKind::Dantzig;
  dantzig.A = make_dense(a);
  dantzig.y = SpaceElement::from_vector(y);
  dantzig.delta = 0.15 * (a.transpose() * y).lpNorm<Eigen::Infinity>();
  dantzig.mu = 0.01;
  SolveResult rd = tight_solve(build(dantzig));
  CHECK(feasibility(dantzig, rd.x).residual <= dantzig.delta * (1.0 + 1e-6));

  ModelSpec lasso = dantzig;
  lasso.kind = ModelKind::Lasso;
  lasso.epsilon = 0.1 * y.norm();
  SolveResult rl = tight_solve(build(lasso));
  CHECK(feasibility(lasso, rl.x).residual <= lasso.epsilon * (1.0 + 1e-6));
}

TEST_CASE("reweighting scales the analysis operator") {
  ModelSpec spec;
  spec.kind = ModelKind::Lasso;
  spec.A = make_identity(Space::real(3));
  spec.y = SpaceElement::from_vector(Eigen::Vector3d(1, 2, 3));
  spec.epsilon = 0.1;
  spec.mu = 1.0;

  // (W x_prev)_i = 0 gives the finite weight 1 / eps_w.
  ModelSpec rw = reweight(spec, SpaceElement::zeros(Space::real(3)), 0.5);
  CHECK(rw.kind == ModelKind::L1Analysis);
  SpaceElement e0 = SpaceElement::from_vector(Eigen::Vector3d(1, 0, 0));
  CHECK(rw.W.forward(e0).data[0] == doctest::Approx(2.0));
  CHECK_THROWS_AS(reweight(spec, SpaceElement::zeros(Space::real(3)), 0.0), InvalidArgument);

  // Uniform |W x| rescales the objective uniformly, leaving the argmin alone.
  auto rng = make_rng(60);
  Eigen::MatrixXd a = gaussian_matrix(6, 10, rng) / std::sqrt(6.0);
  ModelSpec base;
  base.kind = ModelKind::Lasso;
  base.A = make_dense(a);
  base.y = SpaceElement::from_vector(a * gen_sparse_signal(10, 2, 0.0, 107));
  base.epsilon = 0.05 * base.y.data.norm();
  base.mu = 1e-3;
  SpaceElement uniform(Space::real(10), Eigen::VectorXd::Constant(10, 2.0));
  ModelSpec scaled = reweight(base, uniform, 1.0);  // every weight = 1/3
  SpaceElement xb = exact_solve(base);
  SpaceElement xs = exact_solve(scaled);
  CHECK((xb.data - xs.data).norm() <= 1e-5 * std::max(1.0, xb.data.norm()));
}

TEST_CASE("one reweight step on a sparse instance (support size reported)") {
  auto rng = make_rng(61);
  Eigen::MatrixXd a = gaussian_matrix(10, 20, rng) / std::sqrt(10.0);
  Eigen::VectorXd xt = gen_sparse_signal(20, 3, 20.0, 109);
  ExactInstance inst = gen_lasso_exact(a, xt, 0.05 * (a * xt).norm());
  ModelSpec spec = instance_spec(inst);
  spec.mu = default_mu(spec);
  SpaceElement first = exact_solve(spec);
  ModelSpec rw = reweight(spec, first, 1e-3);
  SpaceElement second = exact_solve(rw);
  auto support_size = [](const Eigen::VectorXd& v) {
    const double cut = 1e-6 * v.lpNorm<Eigen::Infinity>();
    int s = 0;
    for (Index i = 0; i < v.size(); ++i)
      if (std::abs(v[i]) > cut) ++s;
    return s;
  };
  // Observed behavior, reported rather than asserted.
  MESSAGE("support before reweight: ", support_size(first.data),
          ", after: ", support_size(second.data));
}

TEST_CASE("default_mu closed form for orthonormal rows") {
  const Index n = 16, m = 6;
  auto rng = make_rng(62);
  std::vector<Index> rows = sample_without_replacement(n, m, rng);
  Eigen::MatrixXd a = partial_dct_matrix(rows, n);
  Eigen::VectorXd y = gaussian_vector(m, rng);
  ModelSpec spec;
  spec.kind = ModelKind::Lasso;
  spec.A = make_dense(a);
  spec.y = SpaceElement::from_vector(y);
  spec.epsilon = 0.1;
  const double expected = 0.2 / (a.transpose() * y).norm();
  CHECK(default_mu(spec) == doctest::Approx(expected).epsilon(1e-7));

  ModelSpec scaled = spec;
  scaled.y = SpaceElement::from_vector(10.0 * y);
  CHECK(default_mu(scaled) == doctest::Approx(expected / 10.0).epsilon(1e-7));

  ModelSpec zero = spec;
  zero.y = SpaceElement::zeros(Space::real(m));
  CHECK_THROWS_AS(default_mu(zero), InvalidArgument);
}

TEST_CASE("problem files round-trip") {
  auto rng = make_rng(63);
  Eigen::MatrixXd a = gaussian_matrix(3, 5, rng);
  ModelSpec spec;
  spec.kind = ModelKind::Dantzig;
  spec.A = make_dense(a);
  spec.a_json = dense_operator_json(a);
  spec.y = SpaceElement::from_vector(gaussian_vector(3, rng));
  spec.delta = 0.4;
  spec.mu = 0.9;
  const auto path = (std::filesystem::temp_directory_path() / "cfm_problem.json").string();
  save_problem_json(path, spec);
  ModelSpec loaded = load_problem_json(path);
  CHECK(loaded.kind == ModelKind::Dantzig);
  CHECK(loaded.delta == spec.delta);
  CHECK(loaded.mu == spec.mu);
  CHECK((loaded.y.data - spec.y.data).norm() == 0.0);
  auto probe = SpaceElement::from_vector(gaussian_vector(5, rng));
  CHECK((loaded.A.forward(probe).data - spec.A.forward(probe).data).norm() == 0.0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_problem_json("/nonexistent/problem.json"), IoError);
}

TEST_SUITE_END();
