#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cfm/smoothing.hpp"
#include "cfm/space.hpp"

namespace cfm {

//! First-order variants. N07 and LLM perform two generalized projections per
//! iteration, the others one.
enum class Variant { GRA, N83, TS, AT, LLM, N07 };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

enum class BacktrackMode { Standard, Stable, Hybrid };

enum class StopReason { RelativeChange, ObjectiveChange, MaxIters };

struct TraceRow {
  int iter = 0;
  double phi = std::numeric_limits<double>::quiet_NaN();
  double L = 0.0;
  double theta = 1.0;
  int backtracks = 0;
  std::uint64_t fwd = 0;
  std::uint64_t adj = 0;
  std::uint64_t prox = 0;
  double err = std::numeric_limits<double>::quiet_NaN();
};

//! Per-iteration record of a solve. Operator counts are cumulative from the
//! start of the solve and non-decreasing.
struct Trace {
  std::vector<TraceRow> rows;
  std::vector<int> restarts;

  //! CSV with header iter,phi,L,theta,backtracks,fwd,adj,prox,err;
  //! floats printed with 17 significant digits, '.' decimal, no locale.
  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
  std::string to_json() const;
};

struct IterInfo {
  int k;
  const SpaceElement& z;
  const SpaceElement& zbar;
  const SpaceElement& y;
  double theta;
  double L;
  int backtracks;
};

struct SolverOptions {
  Variant variant = Variant::AT;

  // Step policy: fixed t = 1/fixed_L, or backtracking from L0 with per-pass
  // decrease alpha and increase divisor beta.
  bool backtracking = true;
  double fixed_L = 0.0;
  double L0 = 0.0;  //!< 0 = estimate from two points
  double alpha = 0.9;
  double beta = 0.5;
  BacktrackMode mode = BacktrackMode::Hybrid;
  double gamma = 1e-6;

  int restart_interval = 0;  //!< reset theta and zbar every K iterations (0 = never)

  int max_iters = 10000;
  double tol = 1e-8;           //!< relative dual-change stop rule
  double objective_tol = 0.0;  //!< relative objective-change stop rule (0 = off)

  bool trace_phi = true;
  std::optional<SpaceElement> x_ref;  //!< primal reference for the err column
  std::optional<SpaceElement> z_ref;  //!< dual reference (problems without primal structure)
  std::function<void(const IterInfo&)> observer;

  double divergence_factor = 1e6;

  void validate() const;
};

struct SolveResult {
  SpaceElement z;
  SpaceElement x;  //!< recovered primal point (empty for generic problems)
  Trace trace;
  StopReason reason = StopReason::MaxIters;
  int iterations = 0;
};

//! Divergence guard tripped: the objective grew by more than
//! divergence_factor times the initial scale. Carries the trace so far.
class SolverDivergence : public Error {
 public:
  SolverDivergence(const std::string& what, Trace trace)
      : Error(what), trace_(std::move(trace)) {}
  const Trace& trace() const { return trace_; }

 private:
  Trace trace_;
};

//! Coupled theta update: theta_next = 2 / (1 + sqrt(1 + 4 L_next / (theta^2 L))).
//! With L_next == L this is the classical accelerated update; theta == +inf
//! yields 1 (the k = 0 convention). Preserves L_next theta_next^2 / (1 - theta_next)
//! >= L theta^2.
double theta_update(double theta, double L, double L_next);

struct BacktrackDecision {
  bool pass = false;
  double L_required = 0.0;  //!< smallest L satisfying the chosen test
  double L_next = 0.0;      //!< max(L/beta, L_required); meaningful on failure
};

//! Step-size verification at the pair (y, z_new).
//! Standard mode tests the quadratic upper bound on g; stable mode tests
//! |<y - z_new, grad_z - grad_y>| <= (L/2)||z_new - y||^2; hybrid uses the
//! standard test when g_y - g_z >= gamma * |g_z| and the stable test otherwise.
BacktrackDecision backtrack_check_values(double g_y, const SpaceElement& grad_y, double g_z,
                                         const SpaceElement& grad_z, const SpaceElement& y,
                                         const SpaceElement& z_new, double L, double beta,
                                         BacktrackMode mode, double gamma,
                                         const std::vector<double>& ratios);

//! Convenience form evaluating the smooth part of cd at y and z_new.
BacktrackDecision backtrack_check(const CompositeDual& cd, const SpaceElement& y,
                                  const SpaceElement& z_new, double L, double beta,
                                  BacktrackMode mode, double gamma);

//! ||grad g(z0) - grad g(z1)|| / ||z0 - z1|| in the problem geometry.
double estimate_L0(const SmoothFn& g, const SpaceElement& z0, const SpaceElement& z1,
                   const std::vector<double>& ratios = {});

//! Running weighted gradient sum sum_i (L_i theta_i)^{-1} grad g(y_i), kept
//! incrementally; scaled(theta, L) returns theta^2 L times the sum.
class WeightedGradientAccumulator {
 public:
  void add(const SpaceElement& grad, double L, double theta);
  SpaceElement scaled(double theta, double L) const;
  bool empty() const { return empty_; }
  void reset();
  const SpaceElement& sum() const { return sum_; }

 private:
  SpaceElement sum_;
  bool empty_ = true;
};

//! Minimize g(z) + h(z) with the selected variant. ratios carry the per-block
//! dual norm weights of product duals (weight_i = 1/ratio_i); they must match
//! the step ratios baked into h.
SolveResult solve(const SmoothFn& g, const NonsmoothFn& h, const SolverOptions& opts,
                  const SpaceElement& z0, const std::vector<double>& ratios = {});

//! Solve the smoothed composite dual; returns the recovered primal minimizer.
SolveResult solve(const CompositeDual& cd, const SolverOptions& opts, const SpaceElement& z0);

//! AT variant with cached operator sequences: exactly one forward and one
//! adjoint application of cd.abar() per inner-loop pass (accepted or
//! rejected), with the stable backtracking test evaluated through the cached
//! transforms. Iterates match solve() with Variant::AT and
//! BacktrackMode::Stable up to roundoff. A nonzero z0 costs one extra adjoint
//! during initialization.
SolveResult solve_at_cached(const CompositeDual& cd, const SolverOptions& opts,
                            const SpaceElement& z0);

//! solve() with the restart interval set; restart epochs are recorded in the
//! trace. GRA is unaffected by restart.
SolveResult restart_wrapper(const CompositeDual& cd, SolverOptions opts, int interval,
                            const SpaceElement& z0);

//! Separable quadratic 0.5 <z, diag(h) z> - <b, z> + c0, used as a plain
//! smooth objective in tests and experiments.
class QuadraticFn final : public SmoothFn {
 public:
  QuadraticFn(Eigen::VectorXd h_diag, Eigen::VectorXd b, double c0 = 0.0);
  const Space& domain() const override { return space_; }
  double value(const SpaceElement& z) const override;
  double value_grad(const SpaceElement& z, SpaceElement& grad) const override;
  Eigen::VectorXd minimizer() const;

 private:
  Space space_;
  Eigen::VectorXd h_;
  Eigen::VectorXd b_;
  double c0_;
};

}  // namespace cfm
