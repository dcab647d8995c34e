#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cfm/errors.hpp"

namespace cfm {

using Index = Eigen::Index;

//! Structural description of a vector-space element: a real vector, a complex
//! vector, a real matrix, or an ordered product of such blocks.
//!
//! Every space has a flat real coordinate representation. Complex vectors are
//! stored as interleaved (re, im) pairs and matrices column-major, so the
//! real-valued inner product of two elements is always the plain dot product
//! of their flat coordinates; for complex blocks this equals Re(a^H b).
class Space {
 public:
  enum class Kind { Real, Complex, Matrix, Product };

  Space() : kind_(Kind::Real), n1_(0), n2_(1) {}

  static Space real(Index n);
  static Space complex(Index n);
  static Space matrix(Index rows, Index cols);
  static Space product(std::vector<Space> parts);

  Kind kind() const { return kind_; }
  //! Total number of real coordinates.
  Index real_dim() const { return dim_; }

  //! Vector length (Real/Complex kinds).
  Index size() const { return n1_; }
  Index rows() const { return n1_; }
  Index cols() const { return n2_; }

  Index block_count() const { return kind_ == Kind::Product ? Index(parts_.size()) : 1; }
  const Space& block(Index i) const;
  //! Offset of block i in the flat coordinate vector.
  Index block_offset(Index i) const;

  bool operator==(const Space& other) const;
  bool operator!=(const Space& other) const { return !(*this == other); }

  std::string describe() const;

 private:
  Kind kind_;
  Index n1_, n2_;
  Index dim_ = 0;
  std::vector<Space> parts_;
  std::vector<Index> offsets_;
};

//! An element of a Space: structural metadata plus flat real coordinates.
struct SpaceElement {
  Space space;
  Eigen::VectorXd data;

  SpaceElement() = default;
  SpaceElement(Space s, Eigen::VectorXd d);

  static SpaceElement zeros(const Space& s);
  static SpaceElement from_vector(const Eigen::VectorXd& v);
  static SpaceElement from_matrix(const Eigen::MatrixXd& m);
  static SpaceElement from_complex(const Eigen::VectorXcd& v);

  bool is_zero() const { return data.isZero(0.0); }

  //! View the coordinates as a matrix (Matrix kind only).
  Eigen::Map<const Eigen::MatrixXd> as_matrix() const;
  Eigen::Map<Eigen::MatrixXd> as_matrix();
  //! View the coordinates as a complex vector (Complex kind only).
  Eigen::Map<const Eigen::VectorXcd> as_complex() const;
  Eigen::Map<Eigen::VectorXcd> as_complex();

  //! Copy of block i of a product element (the whole element when not a product).
  SpaceElement block(Index i) const;
  //! Flat coordinate segment of block i.
  Eigen::VectorBlock<const Eigen::VectorXd> block_data(Index i) const;
  Eigen::VectorBlock<Eigen::VectorXd> block_data(Index i);

  SpaceElement& operator+=(const SpaceElement& o);
  SpaceElement& operator-=(const SpaceElement& o);
  SpaceElement& operator*=(double c);
};

SpaceElement operator+(SpaceElement a, const SpaceElement& b);
SpaceElement operator-(SpaceElement a, const SpaceElement& b);
SpaceElement operator*(double c, SpaceElement a);

//! Real-valued inner product; for complex blocks this is Re(a^H b).
double inner(const SpaceElement& a, const SpaceElement& b);
double norm(const SpaceElement& a);
double norm_sq(const SpaceElement& a);

//! a*x + b*y over a common space.
SpaceElement lincomb(double a, const SpaceElement& x, double b, const SpaceElement& y);

//! Assemble a product-space element from blocks.
SpaceElement concat(const std::vector<SpaceElement>& blocks);

void check_same_space(const Space& a, const Space& b, const char* context);

}  // namespace cfm
