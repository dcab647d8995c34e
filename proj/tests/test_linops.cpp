#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "cfm/linops.hpp"
#include "cfm/matrix_io.hpp"
#include "cfm/random.hpp"
#include "support/oracles.hpp"

using namespace cfm;

namespace {

void check_le(double value, double bound) { CHECK(value <= bound); }

}  // namespace

TEST_SUITE_BEGIN("linops");

TEST_CASE("identity maps (1,2,3) to itself") {
  LinOp id = make_identity(Space::real(3));
  Eigen::VectorXd x(3);
  x << 1, 2, 3;
  CHECK(id.forward(SpaceElement::from_vector(x)).data == x);
}

TEST_CASE("dense zero matrix maps anything to zero") {
  LinOp z = make_dense(Eigen::MatrixXd::Zero(2, 3));
  Eigen::VectorXd x(3);
  x << 5, -1, 2;
  CHECK(z.forward(SpaceElement::from_vector(x)).data.isZero(0.0));
}

TEST_CASE("dense adjoint is the hand-computed transpose multiply") {
  Eigen::MatrixXd a(2, 3);
  a << 1, 0, 1, 0, 2, 0;
  Eigen::VectorXd y(2);
  y << 1, 1;
  Eigen::VectorXd expected(3);
  expected << 1, 2, 1;
  CHECK(make_dense(a).adjoint(SpaceElement::from_vector(y)).data == expected);
}

TEST_CASE("counters increase by exactly one per application") {
  LinOp a = make_dense(Eigen::MatrixXd::Identity(3, 3));
  SpaceElement x = SpaceElement::zeros(Space::real(3));
  for (int k = 1; k <= 5; ++k) {
    a.forward(x);
    CHECK(a.forward_count() == std::uint64_t(k));
  }
  CHECK(a.adjoint_count() == 0);
  a.apply(x, Direction::Adjoint);
  CHECK(a.adjoint_count() == 1);
  a.apply(x, Direction::Forward);
  CHECK(a.forward_count() == 6);
  a.reset_counters();
  CHECK(a.forward_count() == 0);
}

TEST_CASE("dimension mismatch names both spaces") {
  LinOp a = make_dense(Eigen::MatrixXd::Zero(2, 3));
  try {
    a.forward(SpaceElement::zeros(Space::real(5)));
    CHECK(false);
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("R^5") != std::string::npos);
    CHECK(msg.find("R^3") != std::string::npos);
  }
}

TEST_CASE("subsampling reads entries and its adjoint scatters them back") {
  Eigen::MatrixXd m(2, 2);
  m << 7, 9, 3, 4;  // [[a,b],[c,d]] with a = 7
  LinOp s = make_subsample({{0, 0}}, 2, 2);
  SpaceElement fwd = s.forward(SpaceElement::from_matrix(m));
  CHECK(fwd.data.size() == 1);
  CHECK(fwd.data[0] == 7);

  Eigen::VectorXd v(1);
  v << 5;
  SpaceElement back = s.adjoint(SpaceElement::from_vector(v));
  Eigen::MatrixXd expected(2, 2);
  expected << 5, 0, 0, 0;
  CHECK(back.as_matrix() == expected);
}

TEST_CASE("subsampling rejects duplicate and out-of-range entries") {
  CHECK_THROWS_AS(make_subsample({{0, 0}, {0, 0}}, 2, 2), InvalidArgument);
  CHECK_THROWS_AS(make_subsample({{2, 0}}, 2, 2), InvalidArgument);
}

TEST_CASE("full DCT applied then adjoint-applied is the identity") {
  const Index n = 16;
  std::vector<Index> rows(n);
  for (Index i = 0; i < n; ++i) rows[size_t(i)] = i;
  LinOp c = make_partial_dct(rows, n);
  auto rng = make_rng(4);
  SpaceElement x = gaussian_element(Space::real(n), rng);
  SpaceElement roundtrip = c.adjoint(c.forward(x));
  CHECK((roundtrip.data - x.data).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("partial DCT rows are orthonormal") {
  const Index n = 32;
  auto rng = make_rng(5);
  std::vector<Index> rows = sample_without_replacement(n, 12, rng);
  Eigen::MatrixXd c = partial_dct_matrix(rows, n);
  for (Index i = 0; i < c.rows(); ++i) {
    CHECK(std::abs(c.row(i).norm() - 1.0) <= 1e-12);
    for (Index j = i + 1; j < c.rows(); ++j) CHECK(std::abs(c.row(i).dot(c.row(j))) <= 1e-12);
  }
}

TEST_CASE("partial DCT rejects duplicates") {
  CHECK_THROWS_AS(make_partial_dct({1, 1}, 4), InvalidArgument);
  CHECK_THROWS_AS(make_partial_dct({4}, 4), InvalidArgument);
}

TEST_CASE("diff2d of a constant image is zero") {
  LinOp d = make_diff2d(4);
  SpaceElement img(Space::matrix(4, 4), Eigen::VectorXd::Constant(16, 3.7));
  CHECK(d.forward(img).data.isZero(0.0));
}

TEST_CASE("diff2d stencil matches a hand evaluation") {
  // x = [[0,0],[1,0]] with rows indexed by i: x(1,0) = 1.
  Eigen::MatrixXd img(2, 2);
  img << 0, 0, 1, 0;
  LinOp d = make_diff2d(2);
  SpaceElement out = d.forward(SpaceElement::from_matrix(img));
  auto z = out.as_complex();
  REQUIRE(z.size() == 1);
  CHECK(z[0].real() == doctest::Approx(1.0));
  CHECK(z[0].imag() == doctest::Approx(0.0));
}

TEST_CASE("diff2d requires n >= 2") { CHECK_THROWS_AS(make_diff2d(1), InvalidArgument); }

TEST_CASE("diff2d output ordering runs i fastest") {
  // Pin the documented flattening k = i + j*(n-1) on a 3x3 image.
  LinOp d = make_diff2d(3);
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(3, 3);

  img(2, 1) = 5;  // x_{i+1,j} for (i,j) = (1,1) -> k = i + j*(n-1) = 3, real part
  SpaceElement out1 = d.forward(SpaceElement::from_matrix(img));
  auto z1 = out1.as_complex();
  REQUIRE(z1.size() == 4);
  CHECK(z1[3].real() == doctest::Approx(5.0));
  CHECK(z1[0] == std::complex<double>(0.0, 0.0));

  img.setZero();
  img(1, 2) = 5;  // x_{i,j+1} for (i,j) = (1,1) -> k = 3, imaginary part
  SpaceElement out2 = d.forward(SpaceElement::from_matrix(img));
  auto z2 = out2.as_complex();
  CHECK(z2[3].imag() == doctest::Approx(5.0));
  CHECK(z2[1].real() == doctest::Approx(0.0));
}

TEST_CASE("compose with identity and scaling behave pointwise") {
  auto rng = make_rng(6);
  Eigen::MatrixXd am = gaussian_matrix(4, 6, rng);
  LinOp a = make_dense(am);
  LinOp ai = compose(a, make_identity(Space::real(6)));
  LinOp a2 = scale(a, 2.0);
  SpaceElement x = gaussian_element(Space::real(6), rng);
  CHECK((ai.forward(x).data - a.forward(x).data).norm() == 0.0);
  CHECK((a2.forward(x).data - 2.0 * a.forward(x).data).norm() <= 1e-14);
}

TEST_CASE("stack adjoint is the sum of block adjoints") {
  auto rng = make_rng(7);
  Eigen::MatrixXd wm = gaussian_matrix(5, 6, rng);
  Eigen::MatrixXd am = gaussian_matrix(3, 6, rng);
  LinOp s = stack({make_dense(wm), make_dense(am)});
  SpaceElement z1 = gaussian_element(Space::real(5), rng);
  SpaceElement z2 = gaussian_element(Space::real(3), rng);
  SpaceElement z = concat({z1, z2});
  Eigen::VectorXd expected = wm.transpose() * z1.data + am.transpose() * z2.data;
  CHECK((s.adjoint(z).data - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("adjoint identity holds for every operator and composition") {
  auto rng = make_rng(8);
  Eigen::MatrixXd am = gaussian_matrix(5, 9, rng);
  std::vector<Index> rows = sample_without_replacement(12, 5, rng);
  std::vector<std::pair<Index, Index>> entries;
  for (Index f : sample_without_replacement(12, 7, rng)) entries.emplace_back(f % 4, f / 4);

  std::vector<LinOp> ops = {
      make_dense(am),
      make_diag(gaussian_vector(9, rng)),
      make_identity(Space::real(6)),
      make_partial_dct(rows, 12),
      make_subsample(entries, 4, 3),
      make_diff2d(5),
      make_reshape(Space::matrix(3, 4), Space::real(12)),
      scale(make_dense(am), -2.5),
      compose(adjoint_op(make_dense(am)), make_dense(am)),
      stack({make_dense(am), make_diag(gaussian_vector(9, rng))}),
  };
  for (const auto& op : ops) {
    testsupport::check_adjoint_identity(op, 100, 1e-10, rng, check_le);
  }
}

TEST_CASE("estimate_norm matches known norms") {
  CHECK(estimate_norm(make_identity(Space::real(8))) == doctest::Approx(1.0).epsilon(1e-8));
  Eigen::MatrixXd d = Eigen::Vector2d(3.0, 1.0).asDiagonal();
  CHECK(estimate_norm(make_dense(d)) == doctest::Approx(3.0).epsilon(1e-6));
  auto rng = make_rng(9);
  LinOp a = make_dense(gaussian_matrix(4, 4, rng));
  CHECK(estimate_norm(scale(a, 2.0)) == doctest::Approx(2.0 * estimate_norm(a)).epsilon(1e-6));
  CHECK(estimate_norm(make_dense(Eigen::MatrixXd::Zero(3, 3))) == 0.0);
}

TEST_CASE("csv and cfm matrix files round-trip exactly") {
  auto rng = make_rng(10);
  Eigen::MatrixXd m = gaussian_matrix(5, 3, rng);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string csv = (dir / "cfm_test_mat.csv").string();
  const std::string bin = (dir / "cfm_test_mat.cfm").string();
  save_matrix_csv(csv, m);
  save_matrix_cfm(bin, m);
  CHECK(load_matrix_csv(csv) == m);
  CHECK(load_matrix_cfm(bin) == m);
  std::remove(csv.c_str());
  std::remove(bin.c_str());
  CHECK_THROWS_AS(load_matrix_cfm("/nonexistent/file.cfm"), IoError);
}

TEST_SUITE_END();
