#pragma once

/// @file covariance.hpp
/// @brief Covariance of the basis coefficients eta: K = Phi (phi Lambda_Q) Phi'.
///
/// GAP: Phi is a Givens rotator product whose angles follow a two-parameter
/// logit regression on the reference angles of Phi_Q. MI: Phi = Phi_Q, so
/// K = phi Psi' Q Psi.

#include <random>

#include <Eigen/Dense>

#include "countcos/basis.hpp"

namespace countcos::covariance {

enum class PriorKind { GAP, MI };

struct GapParams {
  double a = 0.0;
  double b = 1.0;
  double phi = 1.0;
};

/// logit(1/2 + g/pi): the reference angle on the regression scale.
[[nodiscard]] double reference_logit(double angle);

/// Rotation angle pi (logistic(a + b * reference_logit(g)) - 1/2).
[[nodiscard]] double gap_angle(double a, double b, double reference_angle);

/// Givens rotator product with angles gap_angle(a, b, g_ij) for every i < j.
[[nodiscard]] Eigen::MatrixXd phi_from_gap(double a, double b, const basis::MoranBasis& basis);

/// Lambda_Q with entries below 1e-10 max(Lambda_Q) raised to that floor.
/// Throws NumericalError when every entry is zero.
[[nodiscard]] Eigen::VectorXd floored_spectrum(const Eigen::VectorXd& lambda);

/// K in factored form. Phi is orthogonal, so log det K does not depend on it.
class CovarianceFactor {
 public:
  CovarianceFactor(Eigen::MatrixXd rotation, Eigen::VectorXd spectrum, double phi);

  [[nodiscard]] Eigen::MatrixXd matrix() const;
  [[nodiscard]] double log_det() const;
  /// eta' K^{-1} eta
  [[nodiscard]] double quad_form(const Eigen::VectorXd& eta) const;
  /// eta' Phi Lambda^{-1} Phi' eta, i.e. phi * quad_form(eta).
  [[nodiscard]] double unscaled_quad_form(const Eigen::VectorXd& eta) const;
  /// K^{-1} v
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

  /// Draw from Gaussian(0, K).
  template <class Rng>
  [[nodiscard]] Eigen::VectorXd sample(Rng& rng) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(spectrum_.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal(rng) * std::sqrt(phi_ * spectrum_(k));
    return rotation_ * z;
  }

  [[nodiscard]] const Eigen::MatrixXd& rotation() const noexcept { return rotation_; }
  [[nodiscard]] const Eigen::VectorXd& spectrum() const noexcept { return spectrum_; }
  [[nodiscard]] double phi() const noexcept { return phi_; }
  [[nodiscard]] std::size_t rank() const noexcept { return static_cast<std::size_t>(spectrum_.size()); }

 private:
  Eigen::MatrixXd rotation_;
  Eigen::VectorXd spectrum_;
  double phi_;
};

/// GAP: K = Phi(a,b) (phi Lambda_Q) Phi(a,b)'. MI: K = Phi_Q (phi Lambda_Q) Phi_Q'.
[[nodiscard]] CovarianceFactor k_matrix(const GapParams& params, const basis::MoranBasis& basis, PriorKind kind);

}  // namespace countcos::covariance
