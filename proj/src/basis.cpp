#include "countcos/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace countcos::basis {

namespace {

// Descending eigen-decomposition with the first-significant-entry-positive
// sign convention.
void sorted_eigensystem(const Eigen::MatrixXd& m, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigen-decomposition failed");
  const auto n = m.rows();
  values.resize(n);
  vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    values(k) = solver.eigenvalues()(n - 1 - k);
    vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = vectors(i, k);
      if (std::fabs(v) > 1e-12) {
        if (v < 0.0) vectors.col(k) *= -1.0;
        break;
      }
    }
  }
}

}  // namespace

CovariateMatrix CovariateMatrix::intercept(std::size_t n) {
  return {Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1), {"intercept"}};
}

void CovariateMatrix::validate() const {
  if (X.cols() == 0) throw RankDeficiencyError("covariate matrix has no columns");
  if (X.rows() < X.cols()) throw RankDeficiencyError("covariate matrix has fewer rows than columns");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 1e-10 * s(0))) throw RankDeficiencyError("covariate matrix is rank deficient");
}

Eigen::MatrixXd complement_projector(const CovariateMatrix& covariates) {
  covariates.validate();
  const auto n = covariates.X.rows();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(covariates.X);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, covariates.X.cols());
  Eigen::MatrixXd p = -q * q.transpose();
  p.diagonal().array() += 1.0;
  return p;
}

Eigen::MatrixXd moran_operator(const Eigen::MatrixXd& adjacency, const CovariateMatrix& covariates) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() != covariates.X.rows()) {
    throw NumericalError("moran_operator: dimension mismatch");
  }
  const Eigen::MatrixXd p = complement_projector(covariates);
  Eigen::MatrixXd m = p * adjacency * p;
  // symmetrize away rounding
  m = 0.5 * (m + m.transpose()).eval();
  return m;
}

Eigen::SparseMatrix<double> graph_laplacian(const Eigen::MatrixXd& adjacency) {
  const auto n = adjacency.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < n; ++i) {
    double degree = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && i != j) {
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), -a);
        degree += a;
      }
    }
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), degree);
  }
  Eigen::SparseMatrix<double> q(n, n);
  q.setFromTriplets(triplets.begin(), triplets.end());
  return q;
}

std::size_t basis_rank(std::size_t n_positive, double fraction) {
  const double raw = fraction * static_cast<double>(n_positive);
  // ceil with a little slack so that e.g. 0.1 * 30 does not become 4
  auto r = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(r, 1, std::max<std::size_t>(n_positive, 1));
}

MoranBasis build_basis(const Eigen::MatrixXd& moran, const Eigen::MatrixXd& adjacency, const BasisOptions& options) {
  if (moran.rows() != moran.cols()) throw NumericalError("build_basis: operator is not square");
  if (!(options.fraction > 0.0 && options.fraction <= 1.0)) throw NumericalError("build_basis: fraction must be in (0,1]");
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  sorted_eigensystem(moran, values, vectors);

  const double scale = values.cwiseAbs().maxCoeff();
  std::size_t n_positive = 0;
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values(k) > 1e-10 * scale) ++n_positive;
  }
  if (n_positive == 0) throw NumericalError("build_basis: Moran operator has no positive eigenvalues");

  std::size_t r = options.rank ? *options.rank : basis_rank(n_positive, options.fraction);
  if (r == 0 || r > n_positive) throw NumericalError("build_basis: requested rank exceeds the positive eigenvalue count");

  MoranBasis basis;
  const auto rr = static_cast<Eigen::Index>(r);
  basis.Psi = vectors.leftCols(rr);
  basis.eigenvalues = values.head(rr);
  basis.n_positive = n_positive;
  attach_laplacian(basis, graph_laplacian(adjacency));
  return basis;
}

void attach_laplacian(MoranBasis& basis, Eigen::SparseMatrix<double> laplacian) {
  basis.Q = std::move(laplacian);
  const Eigen::MatrixXd qpsi = basis.Q * basis.Psi;
  Eigen::MatrixXd small = basis.Psi.transpose() * qpsi;
  small = 0.5 * (small + small.transpose()).eval();
  sorted_eigensystem(small, basis.LambdaQ, basis.PhiQ);
  basis.LambdaQ = basis.LambdaQ.cwiseMax(0.0);
  basis.g_angles = givens_extract(basis.PhiQ);
}

}  // namespace countcos::basis
