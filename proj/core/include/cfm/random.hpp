#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <vector>

#include "cfm/space.hpp"

namespace cfm {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

Eigen::VectorXd gaussian_vector(Index n, Rng& rng);
Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, Rng& rng);
SpaceElement gaussian_element(const Space& s, Rng& rng);

//! k distinct indices drawn from {0, ..., n-1}, in draw order.
std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng);

}  // namespace cfm
