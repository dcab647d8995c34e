#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cfm/linops.hpp"
#include "cfm/prox.hpp"
#include "cfm/space.hpp"

namespace cfm {

//! Objective f of the conic standard form  min f(x) s.t. constraints.
enum class ObjectiveKind {
  L1,       //!< f(x) = ||x||_1
  Nuclear,  //!< f(X) = ||X||_*
  Zero,     //!< scalarized objectives: the objective lives in epigraph blocks
};

//! One block of the conic constraint / scalarized objective.
//!
//! Constraint blocks describe op(x) + offset together with an epigraph bound
//! (LinfEpi: ||.||_inf <= bound, SocEpi: ||.||_2 <= bound, OpNormEpi:
//! operator norm <= bound) or a plain cone (Nonneg: >= 0, Zero: == 0).
//! Objective blocks (L1EpiObjective, CL1EpiObjective) contribute
//! bound * ||op(x)||_1 to the objective; their dual blocks are box
//! constrained with that bound.
struct ConeBlock {
  enum class Kind { LinfEpi, SocEpi, OpNormEpi, Nonneg, Zero, L1EpiObjective, CL1EpiObjective };

  Kind kind;
  LinOp op;
  SpaceElement offset;    //!< smooth offset (empty means zero)
  double bound = 0.0;     //!< epigraph offset / objective weight
  SpaceElement h_linear;  //!< linear term carried by h (Nonneg/Zero blocks)
  double step_ratio = 1.0;
};

//! A problem in conic standard form, block-partitioned so that the dual
//! variable of the tau components can be eliminated in closed form.
struct ConicModel {
  ObjectiveKind objective = ObjectiveKind::L1;
  std::vector<ConeBlock> blocks;
  Space primal_space;
};

//! Smooth convex function interface used by the first-order solvers.
class SmoothFn {
 public:
  virtual ~SmoothFn() = default;
  virtual const Space& domain() const = 0;
  virtual double value_grad(const SpaceElement& z, SpaceElement& grad) const = 0;
  virtual double value(const SpaceElement& z) const {
    SpaceElement grad;
    return value_grad(z, grad);
  }
  //! Like value_grad, and additionally exposes the primal minimizer behind
  //! the smooth value when one exists (x_out may be null or left untouched).
  virtual double value_grad_primal(const SpaceElement& z, SpaceElement& grad,
                                   SpaceElement* x_out) const {
    (void)x_out;
    return value_grad(z, grad);
  }
};

struct PrimalRecovery {
  SpaceElement x;
  double f_value = 0.0;  //!< f(x) of the model objective at x
};

//! Closed-form minimizer backend x(w) = argmin_x f(x) + (mu/2)||x - x0||^2 - <x, w>.
class PrimalProx {
 public:
  virtual ~PrimalProx() = default;
  virtual PrimalRecovery recover(const SpaceElement& w) const = 0;
  virtual const Space& primal_space() const = 0;
};

//! The smoothed conic dual in composite form: minimize g_s(z) + h(z) where
//! g_s(z) = -inf_x [ f(x) + (mu/2)||x - x0||^2 - <Abar(x) + bbar, z> ] is
//! smooth with gradient Abar(x(z)) + bbar, and h is prox-capable.
//!
//! Product duals may carry per-block step ratios; the matching dual-space
//! norm weights each block by 1/ratio.
class CompositeDual final : public SmoothFn {
 public:
  CompositeDual(LinOp abar, SpaceElement bbar, std::shared_ptr<const PrimalProx> primal,
                NonsmoothPtr h, double mu, SpaceElement x0, std::vector<double> block_ratios = {});

  const Space& domain() const override { return abar_.output_space(); }
  double value(const SpaceElement& z) const override;
  double value_grad(const SpaceElement& z, SpaceElement& grad) const override;
  double value_grad_primal(const SpaceElement& z, SpaceElement& grad,
                           SpaceElement* x_out) const override;

  //! Unique minimizer of f(x) + mu d(x) - <Abar(x) + bbar, z>.
  SpaceElement primal_minimizer(const SpaceElement& z) const;

  //! Evaluation routed through w = Abar^T(z); used by the operator-efficient
  //! solver loop, which maintains w by recursion instead of adjoint calls.
  PrimalRecovery recover_from_w(const SpaceElement& w) const;
  double value_from_w(const SpaceElement& z, const SpaceElement& w, const PrimalRecovery& rec) const;

  const LinOp& abar() const { return abar_; }
  const SpaceElement& bbar() const { return bbar_; }
  const NonsmoothPtr& h() const { return h_; }
  double mu() const { return mu_; }
  const SpaceElement& x0() const { return x0_; }
  const Space& primal_space() const { return primal_->primal_space(); }
  const std::vector<double>& block_ratios() const { return ratios_; }

  //! Upper bound mu^{-1} ||Abar||^2 on the Lipschitz constant of grad g_s,
  //! in the (possibly weighted) dual geometry. Cached after the first call.
  double lipschitz_bound() const;

 private:
  LinOp abar_;
  SpaceElement bbar_;
  std::shared_ptr<const PrimalProx> primal_;
  NonsmoothPtr h_;
  double mu_;
  SpaceElement x0_;
  std::vector<double> ratios_;
  mutable double lip_cache_ = -1.0;
};

//! Build the smoothed composite dual of a conic model with proximity center x0.
CompositeDual smooth(const ConicModel& model, double mu, const SpaceElement& x0);

//! Objective value of the unsmoothed model at x (includes scalarized blocks).
double model_objective(const ConicModel& model, const SpaceElement& x);

//! Weighted dual-space norms: ||v||^2 = sum_i (1/ratio_i) ||v_i||^2.
//! Empty ratios means the plain Euclidean norm.
double dual_norm_sq(const SpaceElement& v, const std::vector<double>& ratios);
double dual_norm(const SpaceElement& v, const std::vector<double>& ratios);
//! Norm of the dual pairing partner (gradients): blocks weighted by ratio_i.
double grad_norm(const SpaceElement& v, const std::vector<double>& ratios);

struct GapReport {
  double gap = 0.0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  bool primal_feasible = true;
  bool dual_feasible = true;
  double primal_residual = 0.0;  //!< worst constraint violation
  double dual_residual = 0.0;    //!< violation of the conjugate-domain constraint
};

//! Duality gap f(x) - g(z) of the unsmoothed model for a reduced dual point z.
//! Infeasible inputs are flagged and the gap is still reported.
GapReport duality_gap(const ConicModel& model, const SpaceElement& x, const SpaceElement& z);

//! Inner solve for the Moreau envelope: returns the minimizer X_Y of
//! f(x) + (mu/2)||x - Y||^2 over the feasible set, and f(X_Y).
using MoreauInnerSolve = std::function<std::pair<SpaceElement, double>(const SpaceElement& center)>;

struct MoreauEval {
  double value = 0.0;
  SpaceElement grad;
  SpaceElement minimizer;
};

//! Value and gradient of the Moreau envelope h(Y) = min f(x) + (mu/2)||x-Y||^2;
//! grad h(Y) = mu (Y - X_Y) and is mu-Lipschitz.
MoreauEval moreau_value_grad(const MoreauInnerSolve& inner_solve, const SpaceElement& Y, double mu);

}  // namespace cfm
