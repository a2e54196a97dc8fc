#include "countcos/givens.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "countcos/errors.hpp"

namespace countcos::basis {

Eigen::MatrixXd givens_reconstruct(std::span<const double> angles, std::size_t r) {
  if (angles.size() != givens_count(r)) {
    throw NumericalError("givens_reconstruct: expected " + std::to_string(givens_count(r)) + " angles");
  }
  const auto n = static_cast<Eigen::Index>(r);
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n, n);
  // Right-multiplying by O(i,j) only mixes columns i and j.
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
      const double c = std::cos(angles[k]);
      const double s = std::sin(angles[k]);
      for (Eigen::Index row = 0; row < n; ++row) {
        const double xi = out(row, i);
        const double xj = out(row, j);
        out(row, i) = c * xi + s * xj;
        out(row, j) = -s * xi + c * xj;
      }
    }
  }
  return out;
}

std::vector<double> givens_extract(const Eigen::MatrixXd& phi, double tol) {
  if (phi.rows() != phi.cols()) throw NumericalError("givens_extract: matrix is not square");
  const auto n = phi.rows();
  const Eigen::MatrixXd gram = phi.transpose() * phi;
  if ((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > tol) {
    throw NumericalError("givens_extract: matrix is not orthogonal");
  }
  // Peel O(0,1)^T, O(0,2)^T, ... off the left; each step zeros the
  // subdiagonal entry (j,i) with a row rotation, as in Givens QR.
  Eigen::MatrixXd work = phi;
  std::vector<double> angles;
  angles.reserve(givens_count(static_cast<std::size_t>(n)));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double pivot = work(i, i);
      const double target = work(j, i);
      double theta;
      if (pivot == 0.0) {
        theta = target == 0.0 ? 0.0 : std::copysign(std::numbers::pi / 2, target);
      } else {
        theta = std::atan(target / pivot);
      }
      angles.push_back(theta);
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      for (Eigen::Index col = 0; col < n; ++col) {
        const double ri = work(i, col);
        const double rj = work(j, col);
        work(i, col) = c * ri + s * rj;
        work(j, col) = -s * ri + c * rj;
      }
    }
  }
  return angles;
}

Eigen::VectorXd givens_residual_signs(const Eigen::MatrixXd& phi, std::span<const double> angles) {
  const Eigen::MatrixXd g = givens_reconstruct(angles, static_cast<std::size_t>(phi.rows()));
  const Eigen::MatrixXd d = g.transpose() * phi;
  Eigen::VectorXd signs(phi.rows());
  for (Eigen::Index k = 0; k < phi.rows(); ++k) signs(k) = d(k, k) < 0.0 ? -1.0 : 1.0;
  return signs;
}

}  // namespace countcos::basis
