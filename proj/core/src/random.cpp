#include "cfm/random.hpp"

#include <numeric>

#include "cfm/errors.hpp"

namespace cfm {

Eigen::VectorXd gaussian_vector(Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  return m;
}

SpaceElement gaussian_element(const Space& s, Rng& rng) {
  return SpaceElement(s, gaussian_vector(s.real_dim(), rng));
}

std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng) {
  if (k > n || k < 0) throw InvalidArgument("sample_without_replacement: need 0 <= k <= n");
  // Partial Fisher-Yates.
  std::vector<Index> pool(static_cast<size_t>(n));
  std::iota(pool.begin(), pool.end(), Index(0));
  std::vector<Index> out;
  out.reserve(size_t(k));
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    const Index j = pick(rng);
    std::swap(pool[size_t(i)], pool[size_t(j)]);
    out.push_back(pool[size_t(i)]);
  }
  return out;
}

}  // namespace cfm
