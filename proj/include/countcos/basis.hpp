#pragma once

/// @file basis.hpp
/// @brief Moran's I operator and the reduced-rank spatial basis.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "countcos/errors.hpp"
#include "countcos/givens.hpp"

namespace countcos::basis {

/// n1 x p design matrix of full column rank.
struct CovariateMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> labels;

  /// Single intercept column.
  [[nodiscard]] static CovariateMatrix intercept(std::size_t n);

  [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(X.rows()); }
  [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(X.cols()); }

  /// Throws RankDeficiencyError unless sigma_min > 1e-10 sigma_max and n >= p.
  void validate() const;
};

/// I - X (X'X)^{-1} X', the projector onto the complement of col(X).
[[nodiscard]] Eigen::MatrixXd complement_projector(const CovariateMatrix& covariates);

/// P A P with P = complement_projector(X).
[[nodiscard]] Eigen::MatrixXd moran_operator(const Eigen::MatrixXd& adjacency, const CovariateMatrix& covariates);

/// diag(A 1) - A.
[[nodiscard]] Eigen::SparseMatrix<double> graph_laplacian(const Eigen::MatrixXd& adjacency);

/// Basis rank for a given count of positive eigenvalues: ceil(fraction * n_positive), at least 1.
[[nodiscard]] std::size_t basis_rank(std::size_t n_positive, double fraction);

struct BasisOptions {
  double fraction = 0.10;
  /// Explicit rank, overriding the fraction rule.
  std::optional<std::size_t> rank;
};

struct MoranBasis {
  Eigen::MatrixXd Psi;             ///< n1 x r, orthonormal columns
  Eigen::VectorXd eigenvalues;     ///< Moran eigenvalues of the Psi columns, descending
  std::size_t n_positive = 0;      ///< positive eigenvalues of M
  Eigen::SparseMatrix<double> Q;   ///< graph Laplacian
  Eigen::MatrixXd PhiQ;            ///< eigenvectors of Psi' Q Psi
  Eigen::VectorXd LambdaQ;         ///< eigenvalues of Psi' Q Psi, descending, >= 0
  std::vector<double> g_angles;    ///< Givens angles of PhiQ, canonical order

  [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(Psi.rows()); }
  [[nodiscard]] std::size_t rank() const noexcept { return static_cast<std::size_t>(Psi.cols()); }
};

/// Leading eigenvectors of the Moran operator `moran` plus the spectral
/// pieces of Psi' Q Psi for the Laplacian of `adjacency`. Eigenvalues
/// count as positive when > 1e-10 max|lambda|. Each Psi column is signed
/// so that its first entry with |x| > 1e-12 is positive.
[[nodiscard]] MoranBasis build_basis(const Eigen::MatrixXd& moran, const Eigen::MatrixXd& adjacency,
                                     const BasisOptions& options = {});

/// Fills Q-derived fields of `basis` from a Laplacian (used when a basis
/// is reloaded or built from an externally supplied Psi).
void attach_laplacian(MoranBasis& basis, Eigen::SparseMatrix<double> laplacian);

}  // namespace countcos::basis
