#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "cfm/models.hpp"
#include "cfm/solvers.hpp"

namespace cfm {

enum class ContinuationMode { Standard, Accelerated };
enum class CenterRule { Recenter, Fixed };

struct ContinuationOptions {
  ContinuationMode mode = ContinuationMode::Standard;
  double mu0 = 0.0;          //!< 0 = use the model's mu (or default_mu if that is 0)
  double mu_factor = 1.0;    //!< multiplicative decrease per outer step, in (0,1]
  CenterRule center_rule = CenterRule::Recenter;
  double inner_tol0 = 1e-3;      //!< first inner tolerance
  double tol_factor = 1.5;       //!< inner tolerance decrease per outer step (> 1)
  double final_tol = 1e-10;      //!< floor for the inner tolerance
  int max_outer = 50;
  double outer_tol = 1e-8;       //!< relative change stop on X
  bool warm_start_dual = true;   //!< reuse the previous dual point
  SolverOptions solver;          //!< inner solver configuration (tol overridden)
  bool use_cached_solver = false;  //!< run inner solves through solve_at_cached
  std::optional<SpaceElement> x_ref;  //!< reference for the outer err column
  bool keep_inner_traces = false;

  void validate() const;
};

struct OuterRow {
  int j = 0;
  double mu = 0.0;
  int inner_iters = 0;
  std::uint64_t fwd = 0;  //!< cumulative over inner solves
  std::uint64_t adj = 0;
  double h_value = 0.0;   //!< Moreau envelope value f(X) + (mu/2)||X - Y||^2
  double err = std::numeric_limits<double>::quiet_NaN();
};

struct OuterTrace {
  std::vector<OuterRow> rows;
  //! CSV with header j,mu,inner_iters,fwd,adj,h_value,err.
  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
};

struct ContinuationResult {
  SpaceElement x;
  SpaceElement z;  //!< final inner dual point
  OuterTrace outer;
  std::vector<Trace> inner_traces;  //!< populated when keep_inner_traces is set
  int outer_steps = 0;
};

//! Standard continuation: repeatedly solve the smoothed model centered at
//! Y_j, then re-center (or keep Y fixed) and decrease mu. The dual variable
//! warm-starts each subproblem by default.
ContinuationResult continue_standard(const ModelSpec& spec, const ContinuationOptions& opts);

//! Accelerated continuation: proximal-point acceleration on the Moreau
//! envelope, Y_{j+1} = X_{j+1} + (j/(j+3)) (X_{j+1} - X_j).
ContinuationResult continue_accelerated(const ModelSpec& spec, const ContinuationOptions& opts);

}  // namespace cfm
