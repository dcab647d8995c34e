#include "cfm/experiments.hpp"

#include <cmath>

#include "cfm/random.hpp"

namespace cfm::experiments {

namespace {

template <typename F>
auto with_retries(F&& f, std::uint64_t seed, int attempts = 6) {
  for (int t = 0;; ++t) {
    try {
      return f(seed + std::uint64_t(t));
    } catch (const GenerationError&) {
      if (t + 1 >= attempts) throw;
    }
  }
}

Eigen::MatrixXd gaussian_sensing(Index m, Index n, Rng& rng) {
  return gaussian_matrix(m, n, rng) / std::sqrt(double(m));
}

std::vector<double> errors_from_trace(const Trace& trace, int iters) {
  std::vector<double> err(size_t(iters) + 1);
  for (int k = 0; k <= iters; ++k) {
    const size_t idx = std::min(size_t(k), trace.rows.size() - 1);
    err[size_t(k)] = trace.rows[idx].err;
  }
  return err;
}

}  // namespace

MuSweepResult dantzig_mu_sweep(Index m, Index n, Index s, double dynamic_range_db,
                               double delta_frac, std::uint64_t seed, int grid, double mu_hi,
                               double mu_lo) {
  MuSweepResult out;
  out.instance = with_retries(
      [&](std::uint64_t sd) {
        auto rng = make_rng(sd);
        Eigen::MatrixXd A = gaussian_sensing(m, n, rng);
        Eigen::VectorXd xt = gen_sparse_signal(n, s, dynamic_range_db, sd + 1000);
        const Eigen::VectorXd b = A * xt;
        const double delta = delta_frac * (A.transpose() * b).lpNorm<Eigen::Infinity>();
        return gen_dantzig_exact(A, xt, delta, 0.1);
      },
      seed);

  const Eigen::VectorXd& x_ref = out.instance.x_star_unsmoothed;
  const double ref_norm = x_ref.norm();

  ModelSpec spec = instance_spec(out.instance);
  spec.x0 = SpaceElement();  // sweep solves are centered at zero

  SolverOptions sopts;
  sopts.variant = Variant::AT;
  sopts.restart_interval = 100;
  sopts.max_iters = 120000;
  sopts.tol = 1e-12;
  sopts.trace_phi = false;

  for (int g = 0; g < grid; ++g) {
    const double t = grid == 1 ? 0.0 : double(g) / double(grid - 1);
    const double mu = mu_hi * std::pow(mu_lo / mu_hi, t);
    spec.mu = mu;
    SolveResult res = solve(build(spec), sopts, SpaceElement::zeros(Space::real(n)));
    out.rows.push_back({mu, (res.x.data - x_ref).norm() / ref_norm});
  }
  return out;
}

ContCompareResult lasso_continuation_compare(Index m, Index n, Index s, double eps_frac,
                                             double mu_scale, int outer_steps, std::uint64_t seed) {
  ContCompareResult out;
  out.instance = with_retries(
      [&](std::uint64_t sd) {
        auto rng = make_rng(sd);
        Eigen::MatrixXd A = gaussian_sensing(m, n, rng);
        Eigen::VectorXd xt = gen_sparse_signal(n, s, 20.0, sd + 2000);
        const double eps = eps_frac * (A * xt).norm();
        return gen_lasso_exact(A, xt, eps);
      },
      seed);

  ModelSpec spec = instance_spec(out.instance);
  const double mu = mu_scale * default_mu(spec);

  ContinuationOptions copts;
  copts.mu0 = mu;
  copts.mu_factor = 1.0;
  copts.center_rule = CenterRule::Recenter;
  copts.inner_tol0 = 1e-12;  // exact-style inner solves
  copts.final_tol = 1e-12;
  copts.max_outer = outer_steps;
  copts.outer_tol = 0.0;
  copts.x_ref = SpaceElement::from_vector(out.instance.x_star);
  copts.solver.variant = Variant::AT;
  copts.solver.restart_interval = 100;
  copts.solver.max_iters = 40000;
  copts.solver.trace_phi = false;

  ContinuationResult std_run = continue_standard(spec, copts);
  ContinuationResult acc_run = continue_accelerated(spec, copts);
  for (const auto& r : std_run.outer.rows) out.err_standard.push_back(r.err);
  for (const auto& r : acc_run.outer.rows) out.err_accelerated.push_back(r.err);
  return out;
}

QuadraticRestartResult quadratic_restart_compare(Index dim, double m_phi, double l_phi, int iters,
                                                 int restart_interval, std::uint64_t seed) {
  auto rng = make_rng(seed);
  Eigen::VectorXd h(dim);
  for (Index i = 0; i < dim; ++i) {
    const double t = dim == 1 ? 0.0 : double(i) / double(dim - 1);
    h[i] = m_phi * std::pow(l_phi / m_phi, t);
  }
  // Scale the linear term so the minimizer has unit norm; the error curves
  // then start at 1.
  Eigen::VectorXd b = gaussian_vector(dim, rng);
  b /= b.cwiseQuotient(h).norm();
  QuadraticFn quad(h, b);
  SpaceElement z_star = SpaceElement::from_vector(quad.minimizer());
  auto zero_h = prox_zero();

  SolverOptions base;
  base.backtracking = true;
  base.max_iters = iters;
  base.tol = 0.0;
  base.trace_phi = false;
  base.z_ref = z_star;

  SpaceElement z0 = SpaceElement::zeros(Space::real(dim));

  QuadraticRestartResult out;
  {
    SolverOptions o = base;
    o.variant = Variant::GRA;
    out.err_gra = errors_from_trace(solve(quad, *zero_h, o, z0).trace, iters);
  }
  {
    SolverOptions o = base;
    o.variant = Variant::AT;
    out.err_at = errors_from_trace(solve(quad, *zero_h, o, z0).trace, iters);
  }
  {
    SolverOptions o = base;
    o.variant = Variant::AT;
    o.restart_interval = restart_interval;
    out.err_at_restart = errors_from_trace(solve(quad, *zero_h, o, z0).trace, iters);
  }
  return out;
}

std::vector<VariantCurve> dantzig_variant_comparison(Index m, Index n, Index s,
                                                     double dynamic_range_db, double delta_frac,
                                                     double mu, int iters, std::uint64_t seed) {
  ExactInstance inst = with_retries(
      [&](std::uint64_t sd) {
        auto rng = make_rng(sd);
        std::vector<Index> rows = sample_without_replacement(n, m, rng);
        Eigen::MatrixXd A = partial_dct_matrix(rows, n);
        Eigen::VectorXd xt = gen_sparse_signal(n, s, dynamic_range_db, sd + 3000);
        const Eigen::VectorXd b = A * xt;
        const double delta = delta_frac * (A.transpose() * b).lpNorm<Eigen::Infinity>();
        return gen_dantzig_exact(A, xt, delta, mu);
      },
      seed);

  ModelSpec spec = instance_spec(inst);
  const double ref_norm = inst.x_star.norm();
  SpaceElement x_ref = SpaceElement::from_vector(inst.x_star);

  std::vector<VariantCurve> curves;
  for (Variant v : {Variant::GRA, Variant::N83, Variant::TS, Variant::AT, Variant::LLM, Variant::N07}) {
    for (bool backtracking : {false, true}) {
      CompositeDual cd = build(spec);
      SolverOptions o;
      o.variant = v;
      o.backtracking = backtracking;
      if (!backtracking) o.fixed_L = 1.01 * cd.lipschitz_bound();
      o.max_iters = iters;
      o.tol = 1e-14;
      o.trace_phi = false;
      o.x_ref = x_ref;
      SolveResult res = solve(cd, o, SpaceElement::zeros(cd.domain()));
      VariantCurve c;
      c.label = std::string(variant_name(v)) + (backtracking ? "" : "_fixed");
      for (const auto& r : res.trace.rows) {
        c.ops.push_back(r.fwd + r.adj);
        c.err.push_back(r.err / ref_norm);
      }
      curves.push_back(std::move(c));
    }
  }
  return curves;
}

std::vector<StrategyCurve> dantzig_continuation_strategies(Index m, Index n, Index s,
                                                           double dynamic_range_db,
                                                           double delta_frac, std::uint64_t seed) {
  ExactInstance inst = with_retries(
      [&](std::uint64_t sd) {
        auto rng = make_rng(sd);
        std::vector<Index> rows = sample_without_replacement(n, m, rng);
        Eigen::MatrixXd A = partial_dct_matrix(rows, n);
        Eigen::VectorXd xt = gen_sparse_signal(n, s, dynamic_range_db, sd + 4000);
        const Eigen::VectorXd b = A * xt;
        const double delta = delta_frac * (A.transpose() * b).lpNorm<Eigen::Infinity>();
        return gen_dantzig_exact(A, xt, delta, 0.1);
      },
      seed);

  ModelSpec spec = instance_spec(inst);
  spec.x0 = SpaceElement();
  const Eigen::VectorXd& x_ref = inst.x_star_unsmoothed;
  const double ref_norm = x_ref.norm();
  SpaceElement x_ref_el = SpaceElement::from_vector(x_ref);

  std::vector<StrategyCurve> curves;

  const double mu_large = 0.5, mu_small = 0.005;
  for (double mu : {mu_large, mu_small}) {
    ModelSpec fixed = spec;
    fixed.mu = mu;
    SolverOptions o;
    o.variant = Variant::AT;
    o.max_iters = 3000;
    o.tol = 1e-13;
    o.trace_phi = false;
    o.x_ref = x_ref_el;
    SolveResult res = solve(build(fixed), o, SpaceElement::zeros(Space::real(n)));
    StrategyCurve c;
    c.label = mu == mu_large ? "fixed_mu_large" : "fixed_mu_small";
    for (size_t k = 0; k < res.trace.rows.size(); k += 10) {
      c.inner_iters.push_back(std::uint64_t(res.trace.rows[k].iter));
      c.err.push_back(res.trace.rows[k].err / ref_norm);
    }
    curves.push_back(std::move(c));
  }

  for (bool accelerated : {false, true}) {
    ContinuationOptions copts;
    copts.mu0 = mu_large;
    copts.mu_factor = accelerated ? 1.0 : 0.5;
    copts.center_rule = CenterRule::Recenter;
    copts.inner_tol0 = 1e-5;
    copts.tol_factor = 1.5;
    copts.final_tol = 1e-12;
    copts.max_outer = 12;
    copts.outer_tol = 1e-13;
    copts.x_ref = x_ref_el;
    copts.solver.variant = Variant::AT;
    copts.solver.restart_interval = 100;
    copts.solver.max_iters = 3000;
    copts.solver.trace_phi = false;
    ModelSpec cont = spec;
    cont.mu = mu_large;
    ContinuationResult res =
        accelerated ? continue_accelerated(cont, copts) : continue_standard(cont, copts);
    StrategyCurve c;
    c.label = accelerated ? "accelerated_continuation" : "standard_continuation";
    std::uint64_t total = 0;
    for (const auto& r : res.outer.rows) {
      total += std::uint64_t(r.inner_iters);
      c.inner_iters.push_back(total);
      c.err.push_back(r.err / ref_norm);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

McResult matrix_completion_small(std::uint64_t seed, double mu, int max_outer, bool fixed_step) {
  const Index n1 = 50, n2 = 45, rank = 20;
  auto rng = make_rng(seed);
  Eigen::MatrixXd truth =
      gaussian_matrix(n1, rank, rng) * gaussian_matrix(n2, rank, rng).transpose() / std::sqrt(double(rank));

  const Index total = n1 * n2;
  const Index k = Index(std::lround(0.67 * double(total)));
  std::vector<Index> flat = sample_without_replacement(total, k, rng);
  std::vector<std::pair<Index, Index>> entries;
  entries.reserve(size_t(k));
  for (Index f : flat) entries.emplace_back(f % n1, f / n1);
  LinOp A = make_subsample(entries, n1, n2);

  SpaceElement m0 = SpaceElement::from_matrix(truth);
  Eigen::VectorXd signal = A.forward(m0).data;
  Eigen::VectorXd noise = gaussian_vector(k, rng);
  noise *= signal.norm() / noise.norm() * std::pow(10.0, -30.0 / 20.0);
  Eigen::VectorXd y = signal + noise;

  ModelSpec spec;
  spec.kind = ModelKind::NuclearLasso;
  spec.A = A;
  spec.y = SpaceElement::from_vector(y);
  spec.epsilon = noise.norm();
  spec.mu = mu;

  // Reference: the same proximal-point scheme run far past the budget.
  ContinuationOptions refopts;
  refopts.mu0 = mu;
  refopts.mu_factor = 1.0;
  refopts.inner_tol0 = 1e-5;
  refopts.tol_factor = 2.0;
  refopts.final_tol = 1e-11;
  refopts.max_outer = 40;
  refopts.outer_tol = 1e-12;
  refopts.use_cached_solver = true;
  refopts.solver.variant = Variant::AT;
  refopts.solver.mode = BacktrackMode::Stable;
  refopts.solver.L0 = 1.0 / mu;  // the subsampling operator has unit norm
  refopts.solver.max_iters = 4000;
  refopts.solver.trace_phi = false;
  ContinuationResult ref = continue_accelerated(spec, refopts);
  const double ref_norm = ref.x.data.norm();

  const std::uint64_t svt_base = svt_call_count();

  ContinuationOptions mopts = refopts;
  mopts.inner_tol0 = 2e-3;
  mopts.tol_factor = 1.6;
  mopts.final_tol = 1e-6;
  mopts.max_outer = max_outer;
  mopts.outer_tol = 1e-9;
  mopts.solver.max_iters = 60;
  if (fixed_step) {
    // The subsampling operator has unit norm, so 1/mu is the exact Lipschitz
    // constant; a fixed step spends one SVT per iteration instead of two.
    mopts.solver.backtracking = false;
    mopts.solver.fixed_L = 1.0 / mu;
  }
  mopts.x_ref = ref.x;
  mopts.solver.x_ref = ref.x;  // per-iteration error column in the inner traces
  mopts.keep_inner_traces = true;
  ContinuationResult run = continue_accelerated(spec, mopts);

  McResult out;
  std::uint64_t svt = 0;
  for (const Trace& trace : run.inner_traces) {
    for (size_t r = 0; r < trace.rows.size(); ++r) {
      if (r == 0) {
        svt += 1;  // initial primal recovery of the warm-started solve
      } else if (fixed_step) {
        svt += 1;  // gradient evaluation only
      } else {
        svt += 2 * std::uint64_t(1 + trace.rows[r].backtracks);
      }
      out.curve.push_back({svt, trace.rows[r].err / ref_norm});
    }
    if (fixed_step) svt += 1;  // final primal recovery of the solve
  }
  const std::uint64_t measured = svt_call_count() - svt_base;
  if (measured != svt)
    throw NumericalError("matrix completion SVT accounting drifted from the instrumented count");

  out.final_err = out.curve.empty() ? 1.0 : out.curve.back().err;
  for (const auto& p : out.curve) {
    if (p.err <= out.target) {
      out.svt_to_target = p.svt;
      break;
    }
  }
  return out;
}

}  // namespace cfm::experiments
