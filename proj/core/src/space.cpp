#include "cfm/space.hpp"

#include <sstream>

namespace cfm {

Space Space::real(Index n) {
  if (n < 0) throw InvalidArgument("Space::real: negative length");
  Space s;
  s.kind_ = Kind::Real;
  s.n1_ = n;
  s.n2_ = 1;
  s.dim_ = n;
  return s;
}

Space Space::complex(Index n) {
  if (n < 0) throw InvalidArgument("Space::complex: negative length");
  Space s;
  s.kind_ = Kind::Complex;
  s.n1_ = n;
  s.n2_ = 1;
  s.dim_ = 2 * n;
  return s;
}

Space Space::matrix(Index rows, Index cols) {
  if (rows < 0 || cols < 0) throw InvalidArgument("Space::matrix: negative shape");
  Space s;
  s.kind_ = Kind::Matrix;
  s.n1_ = rows;
  s.n2_ = cols;
  s.dim_ = rows * cols;
  return s;
}

Space Space::product(std::vector<Space> parts) {
  Space s;
  s.kind_ = Kind::Product;
  s.n1_ = Index(parts.size());
  s.n2_ = 1;
  s.parts_ = std::move(parts);
  s.offsets_.reserve(s.parts_.size());
  Index off = 0;
  for (const auto& p : s.parts_) {
    s.offsets_.push_back(off);
    off += p.real_dim();
  }
  s.dim_ = off;
  return s;
}

const Space& Space::block(Index i) const {
  if (kind_ != Kind::Product) {
    if (i != 0) throw InvalidArgument("Space::block: index out of range");
    return *this;
  }
  if (i < 0 || i >= Index(parts_.size())) throw InvalidArgument("Space::block: index out of range");
  return parts_[size_t(i)];
}

Index Space::block_offset(Index i) const {
  if (kind_ != Kind::Product) {
    if (i != 0) throw InvalidArgument("Space::block_offset: index out of range");
    return 0;
  }
  if (i < 0 || i >= Index(parts_.size())) throw InvalidArgument("Space::block_offset: index out of range");
  return offsets_[size_t(i)];
}

bool Space::operator==(const Space& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::Real:
    case Kind::Complex:
      return n1_ == other.n1_;
    case Kind::Matrix:
      return n1_ == other.n1_ && n2_ == other.n2_;
    case Kind::Product:
      if (parts_.size() != other.parts_.size()) return false;
      for (size_t i = 0; i < parts_.size(); ++i)
        if (!(parts_[i] == other.parts_[i])) return false;
      return true;
  }
  return false;
}

std::string Space::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Real:
      os << "R^" << n1_;
      break;
    case Kind::Complex:
      os << "C^" << n1_;
      break;
    case Kind::Matrix:
      os << "R^{" << n1_ << "x" << n2_ << "}";
      break;
    case Kind::Product: {
      os << "(";
      for (size_t i = 0; i < parts_.size(); ++i) {
        if (i) os << " x ";
        os << parts_[i].describe();
      }
      os << ")";
      break;
    }
  }
  return os.str();
}

void check_same_space(const Space& a, const Space& b, const char* context) {
  if (!(a == b)) {
    throw DimensionError(std::string(context) + ": space mismatch, " + a.describe() +
                         " vs " + b.describe());
  }
}

SpaceElement::SpaceElement(Space s, Eigen::VectorXd d) : space(std::move(s)), data(std::move(d)) {
  if (data.size() != space.real_dim()) {
    throw DimensionError("SpaceElement: coordinate length " + std::to_string(data.size()) +
                         " does not match " + space.describe());
  }
}

SpaceElement SpaceElement::zeros(const Space& s) {
  return SpaceElement(s, Eigen::VectorXd::Zero(s.real_dim()));
}

SpaceElement SpaceElement::from_vector(const Eigen::VectorXd& v) {
  return SpaceElement(Space::real(v.size()), v);
}

SpaceElement SpaceElement::from_matrix(const Eigen::MatrixXd& m) {
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  return SpaceElement(Space::matrix(m.rows(), m.cols()), std::move(flat));
}

SpaceElement SpaceElement::from_complex(const Eigen::VectorXcd& v) {
  Eigen::VectorXd flat(2 * v.size());
  Eigen::Map<Eigen::VectorXcd>(reinterpret_cast<std::complex<double>*>(flat.data()), v.size()) = v;
  return SpaceElement(Space::complex(v.size()), std::move(flat));
}

Eigen::Map<const Eigen::MatrixXd> SpaceElement::as_matrix() const {
  if (space.kind() != Space::Kind::Matrix) throw DimensionError("as_matrix: not a matrix element");
  return {data.data(), space.rows(), space.cols()};
}

Eigen::Map<Eigen::MatrixXd> SpaceElement::as_matrix() {
  if (space.kind() != Space::Kind::Matrix) throw DimensionError("as_matrix: not a matrix element");
  return {data.data(), space.rows(), space.cols()};
}

Eigen::Map<const Eigen::VectorXcd> SpaceElement::as_complex() const {
  if (space.kind() != Space::Kind::Complex) throw DimensionError("as_complex: not a complex element");
  return {reinterpret_cast<const std::complex<double>*>(data.data()), space.size()};
}

Eigen::Map<Eigen::VectorXcd> SpaceElement::as_complex() {
  if (space.kind() != Space::Kind::Complex) throw DimensionError("as_complex: not a complex element");
  return {reinterpret_cast<std::complex<double>*>(data.data()), space.size()};
}

SpaceElement SpaceElement::block(Index i) const {
  const Space& bs = space.block(i);
  return SpaceElement(bs, data.segment(space.block_offset(i), bs.real_dim()));
}

Eigen::VectorBlock<const Eigen::VectorXd> SpaceElement::block_data(Index i) const {
  return data.segment(space.block_offset(i), space.block(i).real_dim());
}

Eigen::VectorBlock<Eigen::VectorXd> SpaceElement::block_data(Index i) {
  return data.segment(space.block_offset(i), space.block(i).real_dim());
}

SpaceElement& SpaceElement::operator+=(const SpaceElement& o) {
  check_same_space(space, o.space, "operator+=");
  data += o.data;
  return *this;
}

SpaceElement& SpaceElement::operator-=(const SpaceElement& o) {
  check_same_space(space, o.space, "operator-=");
  data -= o.data;
  return *this;
}

SpaceElement& SpaceElement::operator*=(double c) {
  data *= c;
  return *this;
}

SpaceElement operator+(SpaceElement a, const SpaceElement& b) { return a += b; }
SpaceElement operator-(SpaceElement a, const SpaceElement& b) { return a -= b; }
SpaceElement operator*(double c, SpaceElement a) { return a *= c; }

double inner(const SpaceElement& a, const SpaceElement& b) {
  check_same_space(a.space, b.space, "inner");
  return a.data.dot(b.data);
}

double norm(const SpaceElement& a) { return a.data.norm(); }
double norm_sq(const SpaceElement& a) { return a.data.squaredNorm(); }

SpaceElement lincomb(double a, const SpaceElement& x, double b, const SpaceElement& y) {
  check_same_space(x.space, y.space, "lincomb");
  return SpaceElement(x.space, a * x.data + b * y.data);
}

SpaceElement concat(const std::vector<SpaceElement>& blocks) {
  std::vector<Space> parts;
  parts.reserve(blocks.size());
  Index dim = 0;
  for (const auto& b : blocks) {
    parts.push_back(b.space);
    dim += b.space.real_dim();
  }
  Eigen::VectorXd flat(dim);
  Index off = 0;
  for (const auto& b : blocks) {
    flat.segment(off, b.data.size()) = b.data;
    off += b.data.size();
  }
  return SpaceElement(Space::product(std::move(parts)), std::move(flat));
}

}  // namespace cfm
