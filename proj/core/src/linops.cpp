#include "cfm/linops.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "cfm/errors.hpp"

namespace cfm {

struct LinOp::Impl {
  Space input;
  Space output;
  ApplyFn fwd;
  ApplyFn adj;
  std::string name;
  mutable std::atomic<std::uint64_t> forward_count{0};
  mutable std::atomic<std::uint64_t> adjoint_count{0};
};

LinOp::LinOp(Space input, Space output, ApplyFn forward, ApplyFn adjoint, std::string name) {
  impl_ = std::make_shared<Impl>();
  impl_->input = std::move(input);
  impl_->output = std::move(output);
  impl_->fwd = std::move(forward);
  impl_->adj = std::move(adjoint);
  impl_->name = std::move(name);
}

const Space& LinOp::input_space() const { return impl_->input; }
const Space& LinOp::output_space() const { return impl_->output; }
const std::string& LinOp::name() const { return impl_->name; }

SpaceElement LinOp::forward(const SpaceElement& x) const {
  if (!(x.space == impl_->input)) {
    throw DimensionError("LinOp '" + impl_->name + "' forward: input is " + x.space.describe() +
                         ", operator expects " + impl_->input.describe());
  }
  SpaceElement out = SpaceElement::zeros(impl_->output);
  impl_->fwd(x, out);
  impl_->forward_count.fetch_add(1, std::memory_order_relaxed);
  return out;
}

SpaceElement LinOp::adjoint(const SpaceElement& y) const {
  if (!(y.space == impl_->output)) {
    throw DimensionError("LinOp '" + impl_->name + "' adjoint: input is " + y.space.describe() +
                         ", operator expects " + impl_->output.describe());
  }
  SpaceElement out = SpaceElement::zeros(impl_->input);
  impl_->adj(y, out);
  impl_->adjoint_count.fetch_add(1, std::memory_order_relaxed);
  return out;
}

SpaceElement LinOp::apply(const SpaceElement& x, Direction dir) const {
  return dir == Direction::Forward ? forward(x) : adjoint(x);
}

std::uint64_t LinOp::forward_count() const { return impl_->forward_count.load(std::memory_order_relaxed); }
std::uint64_t LinOp::adjoint_count() const { return impl_->adjoint_count.load(std::memory_order_relaxed); }

void LinOp::reset_counters() const {
  impl_->forward_count.store(0, std::memory_order_relaxed);
  impl_->adjoint_count.store(0, std::memory_order_relaxed);
}

LinOp make_identity(const Space& s) {
  auto copy = [](const SpaceElement& x, SpaceElement& out) { out.data = x.data; };
  return LinOp(s, s, copy, copy, "identity");
}

LinOp make_dense(const Eigen::MatrixXd& m) {
  auto mat = std::make_shared<Eigen::MatrixXd>(m);
  auto fwd = [mat](const SpaceElement& x, SpaceElement& out) { out.data.noalias() = (*mat) * x.data; };
  auto adj = [mat](const SpaceElement& y, SpaceElement& out) {
    out.data.noalias() = mat->transpose() * y.data;
  };
  return LinOp(Space::real(m.cols()), Space::real(m.rows()), fwd, adj, "dense");
}

LinOp make_diag(const Eigen::VectorXd& d) {
  auto diag = std::make_shared<Eigen::VectorXd>(d);
  auto apply = [diag](const SpaceElement& x, SpaceElement& out) {
    out.data = diag->cwiseProduct(x.data);
  };
  return LinOp(Space::real(d.size()), Space::real(d.size()), apply, apply, "diag");
}

LinOp make_subsample(const std::vector<std::pair<Index, Index>>& entries, Index n1, Index n2) {
  std::set<std::pair<Index, Index>> seen;
  for (const auto& [i, j] : entries) {
    if (i < 0 || i >= n1 || j < 0 || j >= n2) {
      throw InvalidArgument("make_subsample: entry (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range for " + std::to_string(n1) + "x" + std::to_string(n2));
    }
    if (!seen.insert({i, j}).second) {
      throw InvalidArgument("make_subsample: duplicate entry (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
    }
  }
  auto idx = std::make_shared<std::vector<Index>>();
  idx->reserve(entries.size());
  for (const auto& [i, j] : entries) idx->push_back(i + j * n1);  // column-major flat index
  auto fwd = [idx](const SpaceElement& x, SpaceElement& out) {
    for (size_t k = 0; k < idx->size(); ++k) out.data[Index(k)] = x.data[(*idx)[k]];
  };
  auto adj = [idx](const SpaceElement& y, SpaceElement& out) {
    for (size_t k = 0; k < idx->size(); ++k) out.data[(*idx)[k]] = y.data[Index(k)];
  };
  return LinOp(Space::matrix(n1, n2), Space::real(Index(entries.size())), fwd, adj, "subsample");
}

Eigen::MatrixXd partial_dct_matrix(const std::vector<Index>& rows, Index n) {
  std::set<Index> seen;
  for (Index r : rows) {
    if (r < 0 || r >= n) throw InvalidArgument("make_partial_dct: row " + std::to_string(r) + " out of range");
    if (!seen.insert(r).second) throw InvalidArgument("make_partial_dct: duplicate row " + std::to_string(r));
  }
  // Rows of the orthonormal DCT-II matrix, computed directly in O(m n).
  Eigen::MatrixXd table(Index(rows.size()), n);
  const double c0 = std::sqrt(1.0 / double(n));
  const double ck = std::sqrt(2.0 / double(n));
  for (size_t r = 0; r < rows.size(); ++r) {
    const Index k = rows[r];
    const double scale = (k == 0) ? c0 : ck;
    for (Index j = 0; j < n; ++j) {
      table(Index(r), j) = scale * std::cos(std::numbers::pi * (2.0 * double(j) + 1.0) * double(k) /
                                            (2.0 * double(n)));
    }
  }
  return table;
}

LinOp make_partial_dct(const std::vector<Index>& rows, Index n) {
  auto table = std::make_shared<Eigen::MatrixXd>(partial_dct_matrix(rows, n));
  auto fwd = [table](const SpaceElement& x, SpaceElement& out) { out.data.noalias() = (*table) * x.data; };
  auto adj = [table](const SpaceElement& y, SpaceElement& out) {
    out.data.noalias() = table->transpose() * y.data;
  };
  return LinOp(Space::real(n), Space::real(Index(rows.size())), fwd, adj, "partial_dct");
}

LinOp make_diff2d(Index n) {
  if (n < 2) throw InvalidArgument("make_diff2d: image size must be at least 2");
  const Index m = n - 1;
  auto fwd = [n, m](const SpaceElement& x, SpaceElement& out) {
    auto img = x.as_matrix();
    auto z = out.as_complex();
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < m; ++i)
        z[i + j * m] = std::complex<double>(img(i + 1, j) - img(i, j), img(i, j + 1) - img(i, j));
  };
  auto adj = [n, m](const SpaceElement& y, SpaceElement& out) {
    auto z = y.as_complex();
    auto img = out.as_matrix();
    for (Index j = 0; j < m; ++j) {
      for (Index i = 0; i < m; ++i) {
        const std::complex<double> v = z[i + j * m];
        img(i + 1, j) += v.real();
        img(i, j) -= v.real();
        img(i, j + 1) += v.imag();
        img(i, j) -= v.imag();
      }
    }
  };
  return LinOp(Space::matrix(n, n), Space::complex(m * m), fwd, adj, "diff2d");
}

LinOp compose(const LinOp& a, const LinOp& b) {
  check_same_space(a.input_space(), b.output_space(), "compose");
  auto fwd = [a, b](const SpaceElement& x, SpaceElement& out) { out = a.forward(b.forward(x)); };
  auto adj = [a, b](const SpaceElement& y, SpaceElement& out) { out = b.adjoint(a.adjoint(y)); };
  return LinOp(b.input_space(), a.output_space(), fwd, adj, a.name() + "*" + b.name());
}

LinOp scale(const LinOp& op, double c) {
  auto fwd = [op, c](const SpaceElement& x, SpaceElement& out) {
    out = op.forward(x);
    out.data *= c;
  };
  auto adj = [op, c](const SpaceElement& y, SpaceElement& out) {
    out = op.adjoint(y);
    out.data *= c;
  };
  return LinOp(op.input_space(), op.output_space(), fwd, adj, "scaled_" + op.name());
}

LinOp stack(const std::vector<LinOp>& ops) {
  if (ops.empty()) throw InvalidArgument("stack: no operators");
  for (const auto& op : ops) check_same_space(op.input_space(), ops.front().input_space(), "stack");
  std::vector<Space> outs;
  outs.reserve(ops.size());
  for (const auto& op : ops) outs.push_back(op.output_space());
  Space out_space = Space::product(outs);
  auto fwd = [ops](const SpaceElement& x, SpaceElement& out) {
    for (Index i = 0; i < Index(ops.size()); ++i) out.block_data(i) = ops[size_t(i)].forward(x).data;
  };
  auto adj = [ops](const SpaceElement& y, SpaceElement& out) {
    for (Index i = 0; i < Index(ops.size()); ++i) out += ops[size_t(i)].adjoint(y.block(i));
  };
  return LinOp(ops.front().input_space(), out_space, fwd, adj, "stack");
}

LinOp adjoint_op(const LinOp& op) {
  auto fwd = [op](const SpaceElement& x, SpaceElement& out) { out = op.adjoint(x); };
  auto adj = [op](const SpaceElement& y, SpaceElement& out) { out = op.forward(y); };
  return LinOp(op.output_space(), op.input_space(), fwd, adj, op.name() + "^T");
}

LinOp make_reshape(const Space& input, const Space& output) {
  if (input.real_dim() != output.real_dim()) {
    throw DimensionError("make_reshape: " + input.describe() + " and " + output.describe() +
                         " differ in real dimension");
  }
  auto fwd = [](const SpaceElement& x, SpaceElement& out) { out.data = x.data; };
  return LinOp(input, output, fwd, fwd, "reshape");
}

double estimate_norm(const LinOp& op, int iters, double tol) {
  // Power iteration on op^T op with a fixed internal seed for reproducibility.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpaceElement v = SpaceElement::zeros(op.input_space());
  for (Index i = 0; i < v.data.size(); ++i) v.data[i] = gauss(rng);
  double vn = norm(v);
  if (vn == 0.0) return 0.0;
  v.data /= vn;
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    SpaceElement w = op.adjoint(op.forward(v));
    const double wn = norm(w);
    if (wn == 0.0) return 0.0;
    const double next = std::sqrt(wn);  // ||op^T op v|| -> sigma^2
    w.data /= wn;
    v = std::move(w);
    if (it > 0 && std::abs(next - sigma) <= tol * std::max(1.0, next)) {
      sigma = next;
      break;
    }
    sigma = next;
  }
  return sigma;
}

}  // namespace cfm
