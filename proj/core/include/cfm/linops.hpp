#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cfm/space.hpp"

namespace cfm {

enum class Direction { Forward, Adjoint };

//! A dimensioned linear map with forward and adjoint application.
//!
//! The adjoint is taken with respect to the real-valued inner product of the
//! flat coordinates, so <A x, y> == <x, A^T y> holds for every operator,
//! including maps into complex spaces. Operators are immutable after
//! construction except for the application counters, which are atomic and
//! shared by all copies of the handle.
class LinOp {
 public:
  using ApplyFn = std::function<void(const SpaceElement&, SpaceElement&)>;

  LinOp() = default;
  LinOp(Space input, Space output, ApplyFn forward, ApplyFn adjoint, std::string name = "linop");

  bool valid() const { return impl_ != nullptr; }

  const Space& input_space() const;
  const Space& output_space() const;
  const std::string& name() const;

  //! Apply the operator; increments the matching counter by exactly one.
  SpaceElement forward(const SpaceElement& x) const;
  SpaceElement adjoint(const SpaceElement& y) const;
  SpaceElement apply(const SpaceElement& x, Direction dir) const;

  std::uint64_t forward_count() const;
  std::uint64_t adjoint_count() const;
  void reset_counters() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// ---- constructors -------------------------------------------------------

//! Identity on an arbitrary space.
LinOp make_identity(const Space& s);

//! Dense matrix as an operator R^cols -> R^rows.
LinOp make_dense(const Eigen::MatrixXd& m);

//! Diagonal operator x -> d .* x.
LinOp make_diag(const Eigen::VectorXd& d);

//! Entry subsampling of an n1 x n2 matrix. entries is a list of (row, col)
//! pairs, 0-based; the forward map reads them in order, the adjoint scatters
//! values back with zeros elsewhere. Duplicate or out-of-range entries are
//! rejected.
LinOp make_subsample(const std::vector<std::pair<Index, Index>>& entries, Index n1, Index n2);

//! Selected rows of the orthonormal DCT-II matrix C (C C^T = I), applied as a
//! map R^n -> R^rows. Rows are 0-based, must be distinct and in range.
LinOp make_partial_dct(const std::vector<Index>& rows, Index n);

//! The same rows as a dense matrix.
Eigen::MatrixXd partial_dct_matrix(const std::vector<Index>& rows, Index n);

//! Discrete gradient of an n x n image packed as a complex vector of
//! length (n-1)^2: [D x]_{ij} = (x_{i+1,j} - x_{i,j}) + i (x_{i,j+1} - x_{i,j})
//! for 0 <= i,j < n-1, flattened with i fastest. The adjoint is the real part
//! of the conjugate-transpose action.
LinOp make_diff2d(Index n);

//! Composition a(b(x)).
LinOp compose(const LinOp& a, const LinOp& b);

//! c * op.
LinOp scale(const LinOp& op, double c);

//! Stack operators with a common input space; the output is the product of
//! the individual outputs and the adjoint is the sum of block adjoints.
LinOp stack(const std::vector<LinOp>& ops);

//! Swap forward and adjoint (the transpose of op under the real inner product).
LinOp adjoint_op(const LinOp& op);

//! Reinterpret flat coordinates between two spaces of equal real dimension
//! (e.g. matrix <-> vector). No data movement beyond a copy.
LinOp make_reshape(const Space& input, const Space& output);

//! Power-iteration estimate of the operator norm ||op||. Deterministic
//! (internally seeded); returns 0 for the zero operator. The estimate is a
//! Rayleigh quotient and hence never exceeds the true norm (up to roundoff).
double estimate_norm(const LinOp& op, int iters = 200, double tol = 1e-9);

}  // namespace cfm
