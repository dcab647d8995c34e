#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "cfm/space.hpp"

namespace cfm {

// ---- elementary shrinkage / projection operations -----------------------

//! Componentwise sgn(x) * max(|x| - tau, 0). Requires tau >= 0.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau);
double soft_threshold(double x, double tau);

//! max(1 - t/||z||_2, 0) * z; the zero vector maps to zero. Requires t >= 0.
Eigen::VectorXd shrink_l2(const Eigen::VectorXd& z, double t);

//! Componentwise sgn(z) * min(|z|, tau). Requires tau >= 0.
Eigen::VectorXd trunc(const Eigen::VectorXd& z, double tau);
double trunc(double z, double tau);

//! Componentwise min(1, tau/|z_k|) * z_k, with the factor taken as 1 at z_k = 0.
Eigen::VectorXcd ctrunc(const Eigen::VectorXcd& z, double tau);

//! Componentwise max(z, 0).
Eigen::VectorXd pos(const Eigen::VectorXd& z);

//! Euclidean projection of (y, t) onto the second-order cone {(y,t): ||y|| <= t}.
std::pair<Eigen::VectorXd, double> project_soc(const Eigen::VectorXd& y, double t);

//! Soft-thresholding of singular values: U * ST(Sigma, tau) * V^T.
Eigen::MatrixXd svt(const Eigen::MatrixXd& x, double tau);

struct SvtResult {
  Eigen::MatrixXd x;
  double nuclear_norm;  //!< ||x||_* = sum of the thresholded singular values
};

//! svt() plus the nuclear norm of the result from the same decomposition.
SvtResult svt_with_norm(const Eigen::MatrixXd& x, double tau);

//! Number of dense SVDs performed by svt() since process start (or the last
//! reset). Instrumentation for benchmarks where the SVD dominates the cost.
std::uint64_t svt_call_count();
void reset_svt_call_count();

// ---- generalized projections ---------------------------------------------

//! A convex, possibly extended-valued nonsmooth function h together with its
//! generalized projection argmin_z h(z) + (1/(2t)) ||z - z0||^2 + <g, z>.
class NonsmoothFn {
 public:
  virtual ~NonsmoothFn() = default;
  //! h(z); may return +infinity outside the domain.
  virtual double value(const SpaceElement& z) const = 0;
  //! Generalized projection with step t > 0.
  virtual SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const = 0;
};

using NonsmoothPtr = std::shared_ptr<const NonsmoothFn>;

//! h(z) = scale * ||z||_1 (projection reduces to soft thresholding).
NonsmoothPtr prox_scaled_l1(double scale);
//! h(z) = scale * ||z||_2 (projection reduces to l2 shrinkage).
NonsmoothPtr prox_scaled_l2(double scale);
//! h(Z) = scale * ||Z||_* on a matrix block (projection reduces to SVT).
NonsmoothPtr prox_scaled_nuclear(double scale);
//! h(z) = <linear, z> + indicator of the nonnegative orthant (projection = Pos).
NonsmoothPtr prox_nonneg_indicator(SpaceElement linear = {});
//! Indicator of {||z||_inf <= bound} (projection reduces to truncation).
NonsmoothPtr prox_box_linf(double bound);
//! Indicator of {|z_k| <= bound} for a complex block (projection = CTrunc).
NonsmoothPtr prox_box_clinf(double bound);
//! h(z) = <c, z> (projection is a shifted identity).
NonsmoothPtr prox_linear(SpaceElement c);
//! h identically zero.
NonsmoothPtr prox_zero();

//! Block-separable h over a product space. step_ratios[i] multiplies the
//! projection step used for block i; it must match the block weights the
//! enclosing problem uses for its dual norm (weight_i = 1/step_ratios[i]).
NonsmoothPtr prox_product(std::vector<NonsmoothPtr> blocks, std::vector<double> step_ratios = {});

}  // namespace cfm
