#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace countcos::basis {

/// Number of angles for an r x r rotation: r(r-1)/2.
[[nodiscard]] constexpr std::size_t givens_count(std::size_t r) noexcept { return r * (r - 1) / 2; }

/// Position of angle (i,j), i < j, in the canonical row-major order
/// (0,1),(0,2),...,(0,r-1),(1,2),...,(r-2,r-1).
[[nodiscard]] constexpr std::size_t givens_index(std::size_t i, std::size_t j, std::size_t r) noexcept {
  return i * r - i * (i + 1) / 2 + (j - i - 1);
}

/// Product O(0,1) O(0,2) ... O(r-2,r-1), where O(i,j) is the identity with
/// cos on (i,i),(j,j), -sin on (i,j) and sin on (j,i).
[[nodiscard]] Eigen::MatrixXd givens_reconstruct(std::span<const double> angles, std::size_t r);

/// Angles in [-pi/2, pi/2] such that givens_reconstruct(angles) * D equals
/// `phi` for a diagonal sign matrix D. Throws NumericalError when phi is
/// not orthogonal within `tol`.
[[nodiscard]] std::vector<double> givens_extract(const Eigen::MatrixXd& phi, double tol = 1e-8);

/// The sign matrix D from the extraction, as a vector of +-1.
[[nodiscard]] Eigen::VectorXd givens_residual_signs(const Eigen::MatrixXd& phi, std::span<const double> angles);

}  // namespace countcos::basis
