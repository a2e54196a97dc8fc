#include <doctest.h>

#include <numbers>

#include "countcos/covariance.hpp"
#include "support.hpp"

using namespace countcos;
using namespace countcos::covariance;

namespace {

basis::MoranBasis random_basis(std::size_t n, std::size_t r, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = testing::random_graph(n, 0.3, rng);
  basis::BasisOptions opts;
  opts.rank = r;
  return basis::build_basis(basis::moran_operator(a, basis::CovariateMatrix::intercept(n)), a, opts);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_SUITE("covariance") {

TEST_CASE("gap angle examples") {
  CHECK(gap_angle(0.0, 1.0, 0.0) == 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 50; ++k) {
    const double g = u(rng);
    CHECK(gap_angle(0.0, 1.0, g) == doctest::Approx(g).epsilon(1e-12));
    CHECK(gap_angle(0.0, 0.0, g) == 0.0);
    const double a = u(rng), b = u(rng);
    const double zeta = logistic(a + b * std::log((0.5 + g / std::numbers::pi) / (0.5 - g / std::numbers::pi)));
    CHECK(gap_angle(a, b, g) == doctest::Approx(std::numbers::pi * (zeta - 0.5)).epsilon(1e-12));
    CHECK(std::fabs(gap_angle(a, b, g)) < std::numbers::pi / 2);
  }
}

TEST_CASE("phi_from_gap with a = b = 0 is the identity") {
  std::mt19937_64 rng(2);
  const auto b = random_basis(30, 4, rng);
  CHECK((phi_from_gap(0.0, 0.0, b) - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("phi_from_gap matches a direct rotator product") {
  std::mt19937_64 rng(3);
  const auto b = random_basis(40, 4, rng);
  const Eigen::MatrixXd phi = phi_from_gap(0.2, 0.9, b);
  CHECK((phi.transpose() * phi - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Identity(4, 4);
  std::size_t k = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double g = b.g_angles[k++];
      const double zeta = logistic(0.2 + 0.9 * std::log((0.5 + g / std::numbers::pi) / (0.5 - g / std::numbers::pi)));
      const double t = std::numbers::pi * (zeta - 0.5);
      Eigen::Matrix4d o = Eigen::Matrix4d::Identity();
      o(i, i) = o(j, j) = std::cos(t);
      o(i, j) = -std::sin(t);
      o(j, i) = std::sin(t);
      oracle = oracle * o;
    }
  }
  CHECK((phi - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("diagonal covariance arithmetic") {
  const CovarianceFactor k(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 1.0), 2.0);
  CHECK((k.matrix() - 2.0 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.log_det() == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(k.quad_form(Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(1.0));
  CHECK(k.unscaled_quad_form(Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(2.0));
  CHECK_THROWS_AS(CovarianceFactor(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 1.0), 0.0), NumericalError);
}

TEST_CASE("GAP at (0,1) equals MI") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 10; ++rep) {
    const auto b = random_basis(50, 2 + static_cast<std::size_t>(rep % 6), rng);
    const CovarianceFactor gap = k_matrix({0.0, 1.0, 1.7}, b, PriorKind::GAP);
    const CovarianceFactor mi = k_matrix({0.0, 1.0, 1.7}, b, PriorKind::MI);
    CHECK((gap.matrix() - mi.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::VectorXd eta(static_cast<Eigen::Index>(b.rank()));
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = normal(rng);
    CHECK(gap.quad_form(eta) == doctest::Approx(mi.quad_form(eta)).epsilon(1e-8));
  }
}

TEST_CASE("MI covariance is phi Psi' Q Psi") {
  std::mt19937_64 rng(5);
  const auto b = random_basis(60, 5, rng);
  const Eigen::MatrixXd pqp = b.Psi.transpose() * Eigen::MatrixXd(b.Q) * b.Psi;
  const CovarianceFactor mi = k_matrix({0.0, 1.0, 0.7}, b, PriorKind::MI);
  CHECK((mi.matrix() - 0.7 * pqp).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, pqp.cwiseAbs().maxCoeff()));
}

TEST_CASE("quadratic form and log det against dense oracles") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 10; ++rep) {
    const auto b = random_basis(40, 5, rng);
    const CovarianceFactor k = k_matrix({u(rng), u(rng), 0.1 + std::fabs(u(rng))}, b, PriorKind::GAP);
    const Eigen::MatrixXd dense = k.matrix();
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    Eigen::VectorXd eta(5);
    for (Eigen::Index i = 0; i < 5; ++i) eta(i) = normal(rng);
    const double oracle = eta.dot(dense.inverse() * eta);
    CHECK(k.quad_form(eta) == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(k.log_det() == doctest::Approx(std::log(dense.determinant())).epsilon(1e-8));
    CHECK((k.solve(eta) - dense.inverse() * eta).norm() < 1e-8 * (1.0 + eta.norm() * dense.inverse().norm()));

    Eigen::VectorXd signs(5);
    for (Eigen::Index i = 0; i < 5; ++i) signs(i) = normal(rng) < 0 ? -1.0 : 1.0;
    const CovarianceFactor flipped(k.rotation() * signs.asDiagonal(), k.spectrum(), k.phi());
    CHECK(flipped.quad_form(eta) == doctest::Approx(k.quad_form(eta)).epsilon(1e-12));
    CHECK(flipped.log_det() == doctest::Approx(k.log_det()).epsilon(1e-12));
  }
}

TEST_CASE("spectrum flooring") {
  const Eigen::VectorXd floored = floored_spectrum(Eigen::Vector3d(4.0, 0.0, 1.0));
  CHECK(floored(1) == doctest::Approx(4e-10));
  CHECK(floored(0) == 4.0);
  CHECK_THROWS_AS((void)floored_spectrum(Eigen::Vector3d::Zero()), NumericalError);
}

TEST_CASE("samples have covariance K") {
  std::mt19937_64 rng(8);
  const auto b = random_basis(30, 3, rng);
  const CovarianceFactor k = k_matrix({0.3, 0.8, 1.5}, b, PriorKind::GAP);
  const int n = 200000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd e = k.sample(rng);
    acc += e * e.transpose();
  }
  acc /= n;
  const Eigen::MatrixXd dense = k.matrix();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((dense(i, i) * dense(j, j) + dense(i, j) * dense(i, j)) / n);
      CHECK(std::fabs(acc(i, j) - dense(i, j)) < 4.0 * se);
    }
  }
}

}
