#include "cfm/solvers.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cfm/errors.hpp"

namespace cfm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::GRA: return "GRA";
    case Variant::N83: return "N83";
    case Variant::TS: return "TS";
    case Variant::AT: return "AT";
    case Variant::LLM: return "LLM";
    case Variant::N07: return "N07";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::GRA, Variant::N83, Variant::TS, Variant::AT, Variant::LLM, Variant::N07})
    if (name == variant_name(v)) return v;
  throw InvalidArgument("unknown variant '" + name + "'");
}

void SolverOptions::validate() const {
  if (backtracking) {
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("SolverOptions: beta must lie in (0,1)");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("SolverOptions: alpha must lie in (0,1]");
    if (!(gamma > 0.0)) throw InvalidArgument("SolverOptions: gamma must be positive");
  } else if (!(fixed_L > 0.0)) {
    throw InvalidArgument("SolverOptions: fixed step policy requires fixed_L > 0");
  }
  if (restart_interval < 0) throw InvalidArgument("SolverOptions: restart interval must be >= 0");
  if (max_iters < 1) throw InvalidArgument("SolverOptions: max_iters must be >= 1");
}

void Trace::write_csv(std::ostream& os) const {
  os << "iter,phi,L,theta,backtracks,fwd,adj,prox,err\n";
  for (const auto& r : rows) {
    os << r.iter << ',' << fmt17(r.phi) << ',' << fmt17(r.L) << ',' << fmt17(r.theta) << ','
       << r.backtracks << ',' << r.fwd << ',' << r.adj << ',' << r.prox << ',' << fmt17(r.err)
       << '\n';
  }
}

std::string Trace::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

std::string Trace::to_json() const {
  std::ostringstream os;
  auto num = [](double v) -> std::string {
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
    return fmt17(v);
  };
  os << "{\"schema\":\"cfm/1\",\"rows\":[";
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i) os << ',';
    os << "{\"iter\":" << r.iter << ",\"phi\":" << num(r.phi) << ",\"L\":" << num(r.L)
       << ",\"theta\":" << num(r.theta) << ",\"backtracks\":" << r.backtracks
       << ",\"fwd\":" << r.fwd << ",\"adj\":" << r.adj << ",\"prox\":" << r.prox
       << ",\"err\":" << num(r.err) << '}';
  }
  os << "],\"restarts\":[";
  for (size_t i = 0; i < restarts.size(); ++i) {
    if (i) os << ',';
    os << restarts[i];
  }
  os << "]}";
  return os.str();
}

double theta_update(double theta, double L, double L_next) {
  if (std::isinf(theta)) return 1.0;
  if (!(theta > 0.0)) throw InvalidArgument("theta_update: theta must be positive");
  if (!(L > 0.0 && L_next > 0.0)) throw InvalidArgument("theta_update: L must be positive");
  const double r = 4.0 * L_next / (theta * theta * L);
  return 2.0 / (1.0 + std::sqrt(1.0 + r));
}

BacktrackDecision backtrack_check_values(double g_y, const SpaceElement& grad_y, double g_z,
                                         const SpaceElement& grad_z, const SpaceElement& y,
                                         const SpaceElement& z_new, double L, double beta,
                                         BacktrackMode mode, double gamma,
                                         const std::vector<double>& ratios) {
  SpaceElement delta = z_new - y;
  const double nd2 = dual_norm_sq(delta, ratios);
  BacktrackDecision dec;
  if (nd2 == 0.0) {
    dec.pass = true;
    dec.L_required = 0.0;
    dec.L_next = L;
    return dec;
  }
  bool use_standard = false;
  switch (mode) {
    case BacktrackMode::Standard: use_standard = true; break;
    case BacktrackMode::Stable: use_standard = false; break;
    case BacktrackMode::Hybrid: use_standard = (g_y - g_z >= gamma * std::abs(g_z)); break;
  }
  if (use_standard) {
    dec.L_required = 2.0 * (g_z - g_y - inner(grad_y, delta)) / nd2;
  } else {
    dec.L_required = 2.0 * std::abs(inner(delta, grad_z - grad_y)) / nd2;
  }
  dec.pass = L >= dec.L_required;
  dec.L_next = dec.pass ? L : std::max(L / beta, dec.L_required);
  return dec;
}

BacktrackDecision backtrack_check(const CompositeDual& cd, const SpaceElement& y,
                                  const SpaceElement& z_new, double L, double beta,
                                  BacktrackMode mode, double gamma) {
  SpaceElement grad_y, grad_z;
  const double g_y = cd.value_grad(y, grad_y);
  const double g_z = cd.value_grad(z_new, grad_z);
  return backtrack_check_values(g_y, grad_y, g_z, grad_z, y, z_new, L, beta, mode, gamma,
                                cd.block_ratios());
}

double estimate_L0(const SmoothFn& g, const SpaceElement& z0, const SpaceElement& z1,
                   const std::vector<double>& ratios) {
  SpaceElement d0, d1;
  g.value_grad(z0, d0);
  g.value_grad(z1, d1);
  const double dz = dual_norm(z0 - z1, ratios);
  if (dz == 0.0) throw InvalidArgument("estimate_L0: z0 and z1 coincide");
  return grad_norm(d0 - d1, ratios) / dz;
}

void WeightedGradientAccumulator::add(const SpaceElement& grad, double L, double theta) {
  if (!(L > 0.0) || !(theta > 0.0)) throw InvalidArgument("gradient accumulator: L, theta > 0");
  if (empty_) {
    sum_ = SpaceElement(grad.space, grad.data / (L * theta));
    empty_ = false;
  } else {
    sum_.data += grad.data / (L * theta);
  }
}

SpaceElement WeightedGradientAccumulator::scaled(double theta, double L) const {
  if (empty_) throw InvalidArgument("gradient accumulator: empty");
  return SpaceElement(sum_.space, (theta * theta * L) * sum_.data);
}

void WeightedGradientAccumulator::reset() {
  empty_ = true;
  sum_ = SpaceElement();
}

QuadraticFn::QuadraticFn(Eigen::VectorXd h_diag, Eigen::VectorXd b, double c0)
    : space_(Space::real(h_diag.size())), h_(std::move(h_diag)), b_(std::move(b)), c0_(c0) {
  if (h_.size() != b_.size()) throw DimensionError("QuadraticFn: diag/linear size mismatch");
}

double QuadraticFn::value(const SpaceElement& z) const {
  check_same_space(z.space, space_, "QuadraticFn");
  return 0.5 * z.data.dot(h_.cwiseProduct(z.data)) - b_.dot(z.data) + c0_;
}

double QuadraticFn::value_grad(const SpaceElement& z, SpaceElement& grad) const {
  check_same_space(z.space, space_, "QuadraticFn");
  grad = SpaceElement(space_, h_.cwiseProduct(z.data) - b_);
  return 0.5 * z.data.dot(h_.cwiseProduct(z.data)) - b_.dot(z.data) + c0_;
}

Eigen::VectorXd QuadraticFn::minimizer() const { return b_.cwiseQuotient(h_); }

namespace {

struct CounterProbe {
  std::function<std::uint64_t()> fwd;
  std::function<std::uint64_t()> adj;
  std::uint64_t base_fwd = 0, base_adj = 0;

  void snapshot() {
    base_fwd = fwd ? fwd() : 0;
    base_adj = adj ? adj() : 0;
  }
  std::uint64_t fwd_delta() const { return fwd ? fwd() - base_fwd : 0; }
  std::uint64_t adj_delta() const { return adj ? adj() - base_adj : 0; }
};

// Unified loop over the six variants. `want_primal` requests the primal point
// behind each gradient evaluation for the error column.
class SolveLoop {
 public:
  SolveLoop(const SmoothFn& g, const NonsmoothFn& h, const std::vector<double>& ratios,
            const SolverOptions& opts, CounterProbe probe)
      : g_(g), h_(h), ratios_(ratios), opts_(opts), probe_(std::move(probe)) {}

  SolveResult run(const SpaceElement& z0) {
    opts_.validate();
    probe_.snapshot();
    const bool bt = opts_.backtracking;
    const Variant variant = opts_.variant;
    const bool uses_accumulator = (variant == Variant::TS || variant == Variant::N07);
    const bool want_primal = opts_.x_ref.has_value();

    SpaceElement z = z0, zbar = z0, anchor = z0;
    WeightedGradientAccumulator acc;
    double theta_prev = kInf;
    double L_prev = bt ? initial_L(z0) : opts_.fixed_L;

    double phi_prev = kNaN;
    double phi0 = kNaN;
    if (opts_.trace_phi) {
      phi0 = g_.value(z0) + h_.value(z0);
      phi_prev = phi0;
    }
    push_row(0, phi0, L_prev, 1.0, 0, row0_err(z0));

    SolveResult result;
    result.reason = StopReason::MaxIters;
    int k = 0;
    for (; k < opts_.max_iters; ++k) {
      if (opts_.restart_interval > 0 && k > 0 && k % opts_.restart_interval == 0 &&
          variant != Variant::GRA) {
        theta_prev = kInf;
        zbar = z;
        anchor = z;
        acc.reset();
        trace_.restarts.push_back(k);
      }

      double L = bt ? opts_.alpha * L_prev : opts_.fixed_L;
      int backtracks = 0;
      double theta = 1.0;
      SpaceElement y, grad_y, x_at_y;
      SpaceElement z_next, zbar_next;
      WeightedGradientAccumulator acc_try;
      double g_y = 0.0, g_z = kNaN;

      for (;;) {
        theta = (variant == Variant::GRA) ? 1.0 : theta_update(theta_prev, L_prev, L);
        y = (variant == Variant::GRA) ? z : lincomb(1.0 - theta, z, theta, zbar);
        g_y = g_.value_grad_primal(y, grad_y, want_primal ? &x_at_y : nullptr);

        switch (variant) {
          case Variant::GRA:
            z_next = project(y, grad_y, 1.0 / L);
            zbar_next = z_next;
            break;
          case Variant::N83:
            z_next = project(y, grad_y, 1.0 / L);
            zbar_next = SpaceElement(z.space, z.data + (z_next.data - z.data) / theta);
            break;
          case Variant::AT:
            zbar_next = project(zbar, grad_y, 1.0 / (theta * L));
            z_next = lincomb(1.0 - theta, z, theta, zbar_next);
            break;
          case Variant::LLM:
            zbar_next = project(zbar, grad_y, 1.0 / (theta * L));
            z_next = project(y, grad_y, 1.0 / L);
            break;
          case Variant::TS:
          case Variant::N07: {
            acc_try = acc;
            acc_try.add(grad_y, L, theta);
            zbar_next = project(anchor, acc_try.scaled(theta, L), 1.0 / (theta * theta * L));
            if (variant == Variant::TS)
              z_next = lincomb(1.0 - theta, z, theta, zbar_next);
            else
              z_next = project(y, grad_y, 1.0 / L);
            break;
          }
        }

        if (!bt) break;

        SpaceElement grad_z;
        g_z = g_.value_grad(z_next, grad_z);
        BacktrackDecision dec = backtrack_check_values(g_y, grad_y, g_z, grad_z, y, z_next, L,
                                                       opts_.beta, opts_.mode, opts_.gamma, ratios_);
        if (dec.pass) break;
        L = dec.L_next;
        ++backtracks;
        if (backtracks > 200)
          throw NumericalError("backtracking failed to find an acceptable step after 200 rejections");
      }

      if (!bt && opts_.trace_phi) g_z = g_.value(z_next);

      const double change = dual_norm(z_next - z, ratios_);
      const double z_scale = std::max(1.0, dual_norm(z, ratios_));

      theta_prev = theta;
      L_prev = L;
      z = z_next;
      zbar = zbar_next;
      if (uses_accumulator) acc = acc_try;

      double phi = kNaN;
      if (opts_.trace_phi) {
        phi = g_z + h_.value(z);
        if (std::isfinite(phi0) && phi > phi0 + opts_.divergence_factor * std::max(1.0, std::abs(phi0))) {
          push_row(k + 1, phi, L, theta, backtracks, iter_err(z, x_at_y, want_primal));
          throw SolverDivergence("solver diverged: objective grew beyond the divergence guard",
                                 std::move(trace_));
        }
      }
      push_row(k + 1, phi, L, theta, backtracks, iter_err(z, x_at_y, want_primal));

      if (opts_.observer) {
        opts_.observer(IterInfo{k, z, zbar, y, theta, L, backtracks});
      }

      if (change <= opts_.tol * z_scale) {
        result.reason = StopReason::RelativeChange;
        ++k;
        break;
      }
      if (opts_.objective_tol > 0.0 && opts_.trace_phi && std::isfinite(phi_prev) &&
          std::abs(phi - phi_prev) <= opts_.objective_tol * std::max(1.0, std::abs(phi))) {
        result.reason = StopReason::ObjectiveChange;
        ++k;
        break;
      }
      phi_prev = phi;
    }

    result.z = std::move(z);
    result.trace = std::move(trace_);
    result.iterations = k;
    return result;
  }

  std::uint64_t prox_calls() const { return prox_calls_; }

 private:
  SpaceElement project(const SpaceElement& v, const SpaceElement& grad, double t) {
    ++prox_calls_;
    return h_.project(v, grad, t);
  }

  double initial_L(const SpaceElement& z0) {
    if (opts_.L0 > 0.0) return opts_.L0;
    SpaceElement z1 = z0;
    const double scale = std::max(1.0, dual_norm(z0, ratios_));
    const double step = 1e-2 * scale / std::sqrt(double(std::max<Index>(Index(1), z1.data.size())));
    z1.data.array() += step;
    const double est = estimate_L0(g_, z0, z1, ratios_);
    return std::max(est, 1e-12);
  }

  double row0_err(const SpaceElement& z0) {
    if (opts_.x_ref) {
      SpaceElement grad, x;
      g_.value_grad_primal(z0, grad, &x);
      if (x.data.size()) return (x.data - opts_.x_ref->data).norm();
      return kNaN;
    }
    if (opts_.z_ref) return (z0.data - opts_.z_ref->data).norm();
    return kNaN;
  }

  double iter_err(const SpaceElement& z, const SpaceElement& x_at_y, bool want_primal) {
    if (want_primal && x_at_y.data.size()) return (x_at_y.data - opts_.x_ref->data).norm();
    if (opts_.z_ref) return (z.data - opts_.z_ref->data).norm();
    return kNaN;
  }

  void push_row(int iter, double phi, double L, double theta, int backtracks, double err) {
    TraceRow r;
    r.iter = iter;
    r.phi = phi;
    r.L = L;
    r.theta = theta;
    r.backtracks = backtracks;
    r.fwd = probe_.fwd_delta();
    r.adj = probe_.adj_delta();
    r.prox = prox_calls_;
    r.err = err;
    trace_.rows.push_back(r);
  }

  const SmoothFn& g_;
  const NonsmoothFn& h_;
  std::vector<double> ratios_;
  SolverOptions opts_;
  CounterProbe probe_;
  Trace trace_;
  std::uint64_t prox_calls_ = 0;
};

}  // namespace

SolveResult solve(const SmoothFn& g, const NonsmoothFn& h, const SolverOptions& opts,
                  const SpaceElement& z0, const std::vector<double>& ratios) {
  SolveLoop loop(g, h, ratios, opts, CounterProbe{});
  return loop.run(z0);
}

SolveResult solve(const CompositeDual& cd, const SolverOptions& opts, const SpaceElement& z0) {
  CounterProbe probe;
  const LinOp& op = cd.abar();
  probe.fwd = [op] { return op.forward_count(); };
  probe.adj = [op] { return op.adjoint_count(); };
  SolverOptions o = opts;
  // The Lipschitz bound is a safe starting estimate; backtracking shrinks it.
  if (o.backtracking && o.L0 <= 0.0) o.L0 = std::max(cd.lipschitz_bound(), 1e-12);
  SolveLoop loop(cd, *cd.h(), cd.block_ratios(), o, std::move(probe));
  SolveResult result = loop.run(z0);
  result.x = cd.primal_minimizer(result.z);
  return result;
}

SolveResult restart_wrapper(const CompositeDual& cd, SolverOptions opts, int interval,
                            const SpaceElement& z0) {
  opts.restart_interval = interval;
  return solve(cd, opts, z0);
}

SolveResult solve_at_cached(const CompositeDual& cd, const SolverOptions& opts,
                            const SpaceElement& z0) {
  SolverOptions o = opts;
  o.validate();
  if (o.variant != Variant::AT)
    throw InvalidArgument("solve_at_cached implements the AT variant only");

  const LinOp& A = cd.abar();
  const NonsmoothFn& h = *cd.h();
  const std::vector<double>& ratios = cd.block_ratios();
  const bool bt = o.backtracking;
  const bool want_primal = o.x_ref.has_value();

  CounterProbe probe;
  probe.fwd = [A] { return A.forward_count(); };
  probe.adj = [A] { return A.adjoint_count(); };

  SpaceElement z = z0, zbar = z0;
  SpaceElement zw = z0.is_zero() ? SpaceElement::zeros(cd.primal_space()) : A.adjoint(z0);
  SpaceElement zbarw = zw;

  double L_prev;
  if (bt) {
    L_prev = o.L0 > 0.0 ? o.L0 : std::max(cd.lipschitz_bound(), 1e-12);
  } else {
    L_prev = o.fixed_L;
  }

  probe.snapshot();

  Trace trace;
  std::uint64_t prox_calls = 0;
  SpaceElement last_x;
  bool last_x_is_current = false;

  auto push_row = [&](int iter, double phi, double L, double theta, int backtracks, double err) {
    TraceRow r;
    r.iter = iter;
    r.phi = phi;
    r.L = L;
    r.theta = theta;
    r.backtracks = backtracks;
    r.fwd = probe.fwd_delta();
    r.adj = probe.adj_delta();
    r.prox = prox_calls;
    r.err = err;
    trace.rows.push_back(r);
  };

  double phi0 = kNaN, phi_prev = kNaN;
  double err0 = kNaN;
  if (o.trace_phi || want_primal) {
    PrimalRecovery rec0 = cd.recover_from_w(zw);
    if (o.trace_phi) {
      phi0 = cd.value_from_w(z, zw, rec0) + h.value(z);
      phi_prev = phi0;
    }
    if (want_primal) err0 = (rec0.x.data - o.x_ref->data).norm();
    last_x = std::move(rec0.x);
  }
  push_row(0, phi0, L_prev, 1.0, 0, err0);

  double theta_prev = kInf;
  SolveResult result;
  result.reason = StopReason::MaxIters;
  int k = 0;
  for (; k < o.max_iters; ++k) {
    if (o.restart_interval > 0 && k > 0 && k % o.restart_interval == 0) {
      theta_prev = kInf;
      zbar = z;
      zbarw = zw;
      trace.restarts.push_back(k);
    }

    double L = bt ? o.alpha * L_prev : o.fixed_L;
    int backtracks = 0;
    double theta = 1.0;
    SpaceElement z_next, zw_next, zbar_next, zbarw_next;
    PrimalRecovery rec_y, rec_z;
    bool have_rec_z = false;

    for (;;) {
      theta = theta_update(theta_prev, L_prev, L);
      SpaceElement y = lincomb(1.0 - theta, z, theta, zbar);
      SpaceElement yw = lincomb(1.0 - theta, zw, theta, zbarw);
      rec_y = cd.recover_from_w(yw);
      SpaceElement grad = A.forward(rec_y.x);  // one forward per pass
      grad.data += cd.bbar().data;

      zbar_next = h.project(zbar, grad, 1.0 / (theta * L));
      ++prox_calls;
      zbarw_next = A.adjoint(zbar_next);  // one adjoint per pass
      z_next = lincomb(1.0 - theta, z, theta, zbar_next);
      zw_next = lincomb(1.0 - theta, zw, theta, zbarw_next);

      if (!bt) break;

      rec_z = cd.recover_from_w(zw_next);
      have_rec_z = true;
      // Stable test through the cached transforms:
      // <y - z+, grad g(z+) - grad g(y)> = <yw - zw+, x(zw+) - x(yw)>.
      const double q = std::abs((yw.data - zw_next.data).dot(rec_z.x.data - rec_y.x.data));
      const double nd2 = dual_norm_sq(z_next - y, ratios);
      if (nd2 == 0.0) break;
      const double L_required = 2.0 * q / nd2;
      if (L >= L_required) break;
      L = std::max(L / o.beta, L_required);
      ++backtracks;
      if (backtracks > 200)
        throw NumericalError("backtracking failed to find an acceptable step after 200 rejections");
    }

    if (o.trace_phi && !have_rec_z) {
      rec_z = cd.recover_from_w(zw_next);
      have_rec_z = true;
    }

    const double change = dual_norm(z_next - z, ratios);
    const double z_scale = std::max(1.0, dual_norm(z, ratios));

    theta_prev = theta;
    L_prev = L;
    z = std::move(z_next);
    zw = std::move(zw_next);
    zbar = std::move(zbar_next);
    zbarw = std::move(zbarw_next);

    double phi = kNaN, err = kNaN;
    if (o.trace_phi) phi = cd.value_from_w(z, zw, rec_z) + h.value(z);
    // The error column tracks the primal point behind the accepted gradient
    // evaluation, as in the plain loop.
    if (want_primal) err = (rec_y.x.data - o.x_ref->data).norm();
    last_x = have_rec_z ? std::move(rec_z.x) : std::move(rec_y.x);
    last_x_is_current = have_rec_z;

    if (o.trace_phi && std::isfinite(phi0) &&
        phi > phi0 + o.divergence_factor * std::max(1.0, std::abs(phi0))) {
      push_row(k + 1, phi, L, theta, backtracks, err);
      throw SolverDivergence("solver diverged: objective grew beyond the divergence guard",
                             std::move(trace));
    }
    push_row(k + 1, phi, L, theta, backtracks, err);

    if (change <= o.tol * z_scale) {
      result.reason = StopReason::RelativeChange;
      ++k;
      break;
    }
    if (o.objective_tol > 0.0 && o.trace_phi && std::isfinite(phi_prev) &&
        std::abs(phi - phi_prev) <= o.objective_tol * std::max(1.0, std::abs(phi))) {
      result.reason = StopReason::ObjectiveChange;
      ++k;
      break;
    }
    phi_prev = phi;
  }

  if (!last_x_is_current) last_x = cd.recover_from_w(zw).x;
  result.z = std::move(z);
  result.x = std::move(last_x);
  result.trace = std::move(trace);
  result.iterations = k;
  return result;
}

}  // namespace cfm
