#include "cfm/continuation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cfm/errors.hpp"

namespace cfm {

void ContinuationOptions::validate() const {
  if (!(mu_factor > 0.0 && mu_factor <= 1.0))
    throw InvalidArgument("ContinuationOptions: mu_factor must lie in (0,1]");
  if (!(tol_factor > 1.0)) throw InvalidArgument("ContinuationOptions: tol_factor must exceed 1");
  if (!(inner_tol0 > 0.0 && final_tol > 0.0))
    throw InvalidArgument("ContinuationOptions: tolerances must be positive");
  if (max_outer < 1) throw InvalidArgument("ContinuationOptions: max_outer must be >= 1");
}

void OuterTrace::write_csv(std::ostream& os) const {
  os << "j,mu,inner_iters,fwd,adj,h_value,err\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (const auto& r : rows) {
    os << r.j << ',';
    put(r.mu);
    os << ',' << r.inner_iters << ',' << r.fwd << ',' << r.adj << ',';
    put(r.h_value);
    os << ',';
    put(r.err);
    os << '\n';
  }
}

std::string OuterTrace::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

namespace {

ContinuationResult run_continuation(const ModelSpec& spec, const ContinuationOptions& opts,
                                    bool accelerated) {
  opts.validate();
  spec.validate();

  ModelSpec sub = spec;
  double mu = opts.mu0 > 0.0 ? opts.mu0 : spec.mu;
  if (!(mu > 0.0)) mu = default_mu(spec);

  const Space primal = spec.A.input_space();
  SpaceElement Y = spec.x0.data.size() ? spec.x0 : SpaceElement::zeros(primal);
  SpaceElement X_prev = Y;  // X_0 = Y_0
  SpaceElement z;
  bool have_z = false;

  ContinuationResult result;
  double tol_j = opts.inner_tol0;
  std::uint64_t fwd_total = 0, adj_total = 0;

  int j = 0;
  for (; j < opts.max_outer; ++j) {
    sub.mu = mu;
    sub.x0 = Y;
    CompositeDual cd = build(sub);

    SolverOptions sopts = opts.solver;
    sopts.tol = std::max(tol_j, opts.final_tol);
    SpaceElement z0 = (opts.warm_start_dual && have_z) ? z : SpaceElement::zeros(cd.domain());

    SolveResult inner =
        opts.use_cached_solver ? solve_at_cached(cd, sopts, z0) : solve(cd, sopts, z0);
    z = std::move(inner.z);
    have_z = true;
    SpaceElement X = std::move(inner.x);

    if (!inner.trace.rows.empty()) {
      fwd_total += inner.trace.rows.back().fwd;
      adj_total += inner.trace.rows.back().adj;
    }
    if (opts.keep_inner_traces) result.inner_traces.push_back(std::move(inner.trace));

    OuterRow row;
    row.j = j;
    row.mu = mu;
    row.inner_iters = inner.iterations;
    row.fwd = fwd_total;
    row.adj = adj_total;
    row.h_value = objective_value(spec, X) + 0.5 * mu * (X.data - Y.data).squaredNorm();
    if (opts.x_ref) row.err = (X.data - opts.x_ref->data).norm();
    result.outer.rows.push_back(row);

    const double change = (X.data - X_prev.data).norm() / std::max(1.0, X_prev.data.norm());

    if (accelerated) {
      const double momentum = double(j) / double(j + 3);
      Y = SpaceElement(X.space, X.data + momentum * (X.data - X_prev.data));
    } else if (opts.center_rule == CenterRule::Recenter) {
      Y = X;
    }
    X_prev = std::move(X);

    mu *= opts.mu_factor;
    tol_j /= opts.tol_factor;

    if (change <= opts.outer_tol) {
      ++j;
      break;
    }
  }

  result.x = std::move(X_prev);
  result.z = std::move(z);
  result.outer_steps = j;
  return result;
}

}  // namespace

ContinuationResult continue_standard(const ModelSpec& spec, const ContinuationOptions& opts) {
  ContinuationOptions o = opts;
  o.mode = ContinuationMode::Standard;
  return run_continuation(spec, o, false);
}

ContinuationResult continue_accelerated(const ModelSpec& spec, const ContinuationOptions& opts) {
  ContinuationOptions o = opts;
  o.mode = ContinuationMode::Accelerated;
  return run_continuation(spec, o, true);
}

}  // namespace cfm
