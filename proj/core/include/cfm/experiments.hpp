#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfm/continuation.hpp"
#include "cfm/testgen.hpp"

namespace cfm::experiments {

//! Desk-scale experiment drivers shared by the acceptance suite and the CLI's
//! reproduce command. Every run is deterministic under its seed.

// ---- exact-penalty mu sweep (Dantzig selector) ---------------------------

struct MuSweepRow {
  double mu = 0.0;
  double err = 0.0;  //!< ||x_mu - x_star|| / ||x_star|| against the unsmoothed solution
};

struct MuSweepResult {
  ExactInstance instance;
  std::vector<MuSweepRow> rows;  //!< mu descending
};

MuSweepResult dantzig_mu_sweep(Index m = 32, Index n = 128, Index s = 10,
                               double dynamic_range_db = 40.0, double delta_frac = 0.1,
                               std::uint64_t seed = 7, int grid = 12, double mu_hi = 10.0,
                               double mu_lo = 1e-3);

// ---- standard vs accelerated continuation (LASSO) -------------------------

struct ContCompareResult {
  ExactInstance instance;
  std::vector<double> err_standard;     //!< indexed by outer step j
  std::vector<double> err_accelerated;
};

ContCompareResult lasso_continuation_compare(Index m = 80, Index n = 200, Index s = 20,
                                             double eps_frac = 0.15, double mu_scale = 200.0,
                                             int outer_steps = 50, std::uint64_t seed = 18);

// ---- strong convexity and restart (unconstrained quadratic) ---------------

struct QuadraticRestartResult {
  std::vector<double> err_gra;         //!< ||z_k - z_star||, index = iteration
  std::vector<double> err_at;
  std::vector<double> err_at_restart;
};

QuadraticRestartResult quadratic_restart_compare(Index dim = 200, double m_phi = 0.07,
                                                 double l_phi = 59.1, int iters = 3000,
                                                 int restart_interval = 100,
                                                 std::uint64_t seed = 3);

// ---- first-order variant comparison (smoothed Dantzig) --------------------

struct VariantCurve {
  std::string label;
  std::vector<std::uint64_t> ops;  //!< cumulative forward+adjoint applications
  std::vector<double> err;         //!< relative error against the smoothed exact solution
};

std::vector<VariantCurve> dantzig_variant_comparison(Index m = 64, Index n = 256, Index s = 16,
                                                     double dynamic_range_db = 30.0,
                                                     double delta_frac = 0.1, double mu = 0.25,
                                                     int iters = 1200, std::uint64_t seed = 5);

// ---- continuation strategies on a high dynamic range Dantzig --------------

struct StrategyCurve {
  std::string label;
  std::vector<std::uint64_t> inner_iters;  //!< cumulative
  std::vector<double> err;                 //!< against the unsmoothed exact solution
};

std::vector<StrategyCurve> dantzig_continuation_strategies(Index m = 64, Index n = 256, Index s = 50,
                                                           double dynamic_range_db = 68.0,
                                                           double delta_frac = 0.1,
                                                           std::uint64_t seed = 13);

// ---- small noisy matrix completion ----------------------------------------

struct McPoint {
  std::uint64_t svt = 0;
  double err = 0.0;  //!< relative Frobenius error against the reference solution
};

struct McResult {
  std::vector<McPoint> curve;         //!< AT + accelerated continuation run
  std::uint64_t svt_to_target = 0;    //!< 0 if the target was not reached
  double target = 1e-2;
  double final_err = 0.0;
};

McResult matrix_completion_small(std::uint64_t seed = 17, double mu = 1e-2, int max_outer = 10,
                                 bool fixed_step = true);

}  // namespace cfm::experiments
