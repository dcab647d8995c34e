#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "cfm/models.hpp"

namespace cfm {

//! A generated instance failed a construction check (degenerate support,
//! loose inner solve, rank deficiency); retry with a fresh signal / seed.
class GenerationError : public Error {
 public:
  using Error::Error;
};

struct GenBudget {
  int inner_max_iters = 20000;
  int max_outer = 60;
  double tol = 1e-11;  //!< final inner tolerance of the high-accuracy solve
  int restart_interval = 200;
};

//! KKT residuals of an exact instance; which fields apply depends on the kind.
struct KktReport {
  double primal_residual = 0.0;          //!< feasibility residual (relative for BP)
  double dual_feasibility_residual = 0.0;  //!< max(0, ||A^T lambda||_inf - 1)
  double support_sign_residual = 0.0;      //!< max_T |(A^T lambda)_T - sign(x_T)|
  double offsupport_margin = 1.0;          //!< 1 - max_{T^c} |(A^T lambda)_i|
  double strong_duality_residual = 0.0;
  double complementarity_residual = 0.0;   //!< Dantzig: active-set sign condition
  double stationarity_residual = 0.0;      //!< Dantzig: smoothed primal fixed point
  //! Largest applicable residual (the off-support margin enters as a
  //! constraint, not a residual).
  double max_residual = 0.0;
};

//! Problem data with a certified optimal primal/dual pair. For the Dantzig
//! kind the certificate is exact for the smoothed problem at (mu, x0), and
//! x_star_unsmoothed carries the exact-penalty solution of the unsmoothed one.
struct ExactInstance {
  ModelKind kind = ModelKind::BasisPursuit;
  Eigen::MatrixXd A;  //!< the perturbed operator A * Diag(d)
  Eigen::VectorXd b;
  double delta = 0.0;
  double epsilon = 0.0;
  double mu = 0.0;
  Eigen::VectorXd x0;
  Eigen::VectorXd x_star;
  Eigen::VectorXd lambda_star;
  Eigen::VectorXd d;
  Eigen::VectorXd x_star_unsmoothed;
  KktReport kkt;
};

//! s-sparse signal with log-uniform magnitudes spanning exactly
//! dynamic_range_db decibels (max magnitude 1), random signs and support.
Eigen::VectorXd gen_sparse_signal(Index n, Index s, double dynamic_range_db, std::uint64_t seed);

//! Appendix-style exact basis pursuit instance: run a high-accuracy solve of
//! min ||x||_1 s.t. Ax = A x_tilde, then perturb A -> A Diag(d) so the KKT
//! conditions hold to machine precision, and re-solve the support system.
ExactInstance gen_basis_pursuit_exact(const Eigen::MatrixXd& A, const Eigen::VectorXd& x_tilde,
                                      const GenBudget& budget = {});

//! Exact LASSO instance built on the basis pursuit certificate with
//! b = A x_star + epsilon * lambda_star / ||lambda_star||.
ExactInstance gen_lasso_exact(const Eigen::MatrixXd& A, const Eigen::VectorXd& x_tilde,
                              double epsilon, const GenBudget& budget = {});

//! Exact instance for the smoothed Dantzig selector at (delta, mu), plus an
//! unsmoothed solution obtained by re-centered continuation (exact penalty).
ExactInstance gen_dantzig_exact(const Eigen::MatrixXd& A, const Eigen::VectorXd& x_tilde,
                                double delta, double mu, const GenBudget& budget = {});

//! Recompute every applicable KKT residual from the stored data. Pure and
//! deterministic: recomputing reproduces the stored report bit for bit.
KktReport certify(const ExactInstance& inst);

//! ModelSpec that solves this instance (dense operator payload included).
ModelSpec instance_spec(const ExactInstance& inst);

//! Bundle serialization: problem block plus certificate block, schema cfm/1.
void save_instance_json(const std::string& path, const ExactInstance& inst);
ExactInstance load_instance_json(const std::string& path);

}  // namespace cfm
