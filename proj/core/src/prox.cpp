#include "cfm/prox.hpp"

#include <Eigen/SVD>
#include <atomic>
#include <cmath>
#include <limits>

#include "cfm/errors.hpp"

namespace cfm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonneg(double v, const char* who) {
  if (!(v >= 0.0)) throw InvalidArgument(std::string(who) + ": threshold must be nonnegative");
}

std::atomic<std::uint64_t> g_svt_calls{0};

}  // namespace

double soft_threshold(double x, double tau) {
  require_nonneg(tau, "soft_threshold");
  const double m = std::abs(x) - tau;
  return m > 0.0 ? (x > 0.0 ? m : -m) : 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau) {
  require_nonneg(tau, "soft_threshold");
  return x.unaryExpr([tau](double v) {
    const double m = std::abs(v) - tau;
    return m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
  });
}

Eigen::VectorXd shrink_l2(const Eigen::VectorXd& z, double t) {
  require_nonneg(t, "shrink_l2");
  const double zn = z.norm();
  if (zn <= t) return Eigen::VectorXd::Zero(z.size());
  return (1.0 - t / zn) * z;
}

double trunc(double z, double tau) {
  require_nonneg(tau, "trunc");
  return z > tau ? tau : (z < -tau ? -tau : z);
}

Eigen::VectorXd trunc(const Eigen::VectorXd& z, double tau) {
  require_nonneg(tau, "trunc");
  return z.unaryExpr([tau](double v) { return v > tau ? tau : (v < -tau ? -tau : v); });
}

Eigen::VectorXcd ctrunc(const Eigen::VectorXcd& z, double tau) {
  require_nonneg(tau, "ctrunc");
  return z.unaryExpr([tau](std::complex<double> v) {
    const double a = std::abs(v);
    return (a <= tau) ? v : (tau / a) * v;
  });
}

Eigen::VectorXd pos(const Eigen::VectorXd& z) { return z.cwiseMax(0.0); }

std::pair<Eigen::VectorXd, double> project_soc(const Eigen::VectorXd& y, double t) {
  const double yn = y.norm();
  if (yn <= t) return {y, t};
  if (t <= -yn) return {Eigen::VectorXd::Zero(y.size()), 0.0};
  const double c = (yn + t) / (2.0 * yn);
  return {c * y, c * yn};
}

SvtResult svt_with_norm(const Eigen::MatrixXd& x, double tau) {
  require_nonneg(tau, "svt");
  g_svt_calls.fetch_add(1, std::memory_order_relaxed);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svt: SVD did not converge");
  Eigen::VectorXd s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = std::max(s[i] - tau, 0.0);
  return {svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose(), s.sum()};
}

Eigen::MatrixXd svt(const Eigen::MatrixXd& x, double tau) { return svt_with_norm(x, tau).x; }

std::uint64_t svt_call_count() { return g_svt_calls.load(std::memory_order_relaxed); }
void reset_svt_call_count() { g_svt_calls.store(0, std::memory_order_relaxed); }

namespace {

SpaceElement step_point(const SpaceElement& z0, const SpaceElement& g, double t) {
  check_same_space(z0.space, g.space, "NonsmoothFn::project");
  return SpaceElement(z0.space, z0.data - t * g.data);
}

class ScaledL1 final : public NonsmoothFn {
 public:
  explicit ScaledL1(double s) : scale_(s) { require_nonneg(s, "prox_scaled_l1"); }
  double value(const SpaceElement& z) const override { return scale_ * z.data.lpNorm<1>(); }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    SpaceElement v = step_point(z0, g, t);
    v.data = soft_threshold(v.data, t * scale_);
    return v;
  }

 private:
  double scale_;
};

class ScaledL2 final : public NonsmoothFn {
 public:
  explicit ScaledL2(double s) : scale_(s) { require_nonneg(s, "prox_scaled_l2"); }
  double value(const SpaceElement& z) const override { return scale_ * z.data.norm(); }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    SpaceElement v = step_point(z0, g, t);
    v.data = shrink_l2(v.data, t * scale_);
    return v;
  }

 private:
  double scale_;
};

class ScaledNuclear final : public NonsmoothFn {
 public:
  explicit ScaledNuclear(double s) : scale_(s) { require_nonneg(s, "prox_scaled_nuclear"); }
  double value(const SpaceElement& z) const override {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(z.as_matrix());
    return scale_ * svd.singularValues().sum();
  }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    SpaceElement v = step_point(z0, g, t);
    Eigen::MatrixXd r = svt(v.as_matrix(), t * scale_);
    v.data = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
    return v;
  }

 private:
  double scale_;
};

class NonnegIndicator final : public NonsmoothFn {
 public:
  explicit NonnegIndicator(SpaceElement linear) : linear_(std::move(linear)) {}
  double value(const SpaceElement& z) const override {
    if ((z.data.array() < -1e-12).any()) return kInf;
    return linear_.data.size() ? inner(linear_, z) : 0.0;
  }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    SpaceElement v = step_point(z0, g, t);
    if (linear_.data.size()) v.data -= t * linear_.data;
    v.data = pos(v.data);
    return v;
  }

 private:
  SpaceElement linear_;
};

class BoxLinf final : public NonsmoothFn {
 public:
  explicit BoxLinf(double b) : bound_(b) { require_nonneg(b, "prox_box_linf"); }
  double value(const SpaceElement& z) const override {
    return z.data.lpNorm<Eigen::Infinity>() <= bound_ * (1.0 + 1e-12) + 1e-300 ? 0.0 : kInf;
  }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    SpaceElement v = step_point(z0, g, t);
    v.data = trunc(v.data, bound_);
    return v;
  }

 private:
  double bound_;
};

class BoxCLinf final : public NonsmoothFn {
 public:
  explicit BoxCLinf(double b) : bound_(b) { require_nonneg(b, "prox_box_clinf"); }
  double value(const SpaceElement& z) const override {
    auto c = z.as_complex();
    for (Index i = 0; i < c.size(); ++i)
      if (std::abs(c[i]) > bound_ * (1.0 + 1e-12) + 1e-300) return kInf;
    return 0.0;
  }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    SpaceElement v = step_point(z0, g, t);
    v.as_complex() = ctrunc(v.as_complex(), bound_);
    return v;
  }

 private:
  double bound_;
};

class LinearFn final : public NonsmoothFn {
 public:
  explicit LinearFn(SpaceElement c) : c_(std::move(c)) {}
  double value(const SpaceElement& z) const override { return inner(c_, z); }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    SpaceElement v = step_point(z0, g, t);
    v.data -= t * c_.data;
    return v;
  }

 private:
  SpaceElement c_;
};

class ZeroFn final : public NonsmoothFn {
 public:
  double value(const SpaceElement&) const override { return 0.0; }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    return step_point(z0, g, t);
  }
};

class ProductFn final : public NonsmoothFn {
 public:
  ProductFn(std::vector<NonsmoothPtr> blocks, std::vector<double> ratios)
      : blocks_(std::move(blocks)), ratios_(std::move(ratios)) {
    if (!ratios_.empty() && ratios_.size() != blocks_.size())
      throw InvalidArgument("prox_product: ratios/blocks size mismatch");
    for (double r : ratios_)
      if (!(r > 0.0)) throw InvalidArgument("prox_product: step ratios must be positive");
  }
  double value(const SpaceElement& z) const override {
    double total = 0.0;
    for (Index i = 0; i < Index(blocks_.size()); ++i) {
      total += blocks_[size_t(i)]->value(z.block(i));
      if (std::isinf(total)) return kInf;
    }
    return total;
  }
  SpaceElement project(const SpaceElement& z0, const SpaceElement& g, double t) const override {
    check_same_space(z0.space, g.space, "prox_product");
    if (z0.space.block_count() != Index(blocks_.size()))
      throw DimensionError("prox_product: element has wrong block count");
    SpaceElement out = SpaceElement::zeros(z0.space);
    for (Index i = 0; i < Index(blocks_.size()); ++i) {
      const double ti = ratios_.empty() ? t : t * ratios_[size_t(i)];
      out.block_data(i) = blocks_[size_t(i)]->project(z0.block(i), g.block(i), ti).data;
    }
    return out;
  }

 private:
  std::vector<NonsmoothPtr> blocks_;
  std::vector<double> ratios_;
};

}  // namespace

NonsmoothPtr prox_scaled_l1(double scale) { return std::make_shared<ScaledL1>(scale); }
NonsmoothPtr prox_scaled_l2(double scale) { return std::make_shared<ScaledL2>(scale); }
NonsmoothPtr prox_scaled_nuclear(double scale) { return std::make_shared<ScaledNuclear>(scale); }
NonsmoothPtr prox_nonneg_indicator(SpaceElement linear) {
  return std::make_shared<NonnegIndicator>(std::move(linear));
}
NonsmoothPtr prox_box_linf(double bound) { return std::make_shared<BoxLinf>(bound); }
NonsmoothPtr prox_box_clinf(double bound) { return std::make_shared<BoxCLinf>(bound); }
NonsmoothPtr prox_linear(SpaceElement c) { return std::make_shared<LinearFn>(std::move(c)); }
NonsmoothPtr prox_zero() { return std::make_shared<ZeroFn>(); }
NonsmoothPtr prox_product(std::vector<NonsmoothPtr> blocks, std::vector<double> step_ratios) {
  return std::make_shared<ProductFn>(std::move(blocks), std::move(step_ratios));
}

}  // namespace cfm
