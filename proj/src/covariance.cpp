#include "countcos/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "countcos/errors.hpp"

namespace countcos::covariance {

namespace {
constexpr double kZetaClamp = 1e-12;
}

double reference_logit(double angle) {
  const double zeta = std::clamp(0.5 + angle / std::numbers::pi, kZetaClamp, 1.0 - kZetaClamp);
  return std::log(zeta / (1.0 - zeta));
}

double gap_angle(double a, double b, double reference_angle) {
  const double eta = a + b * reference_logit(reference_angle);
  // logistic(x) - 1/2 = tanh(x/2)/2, which stays accurate near zero
  return std::numbers::pi * 0.5 * std::tanh(0.5 * eta);
}

Eigen::MatrixXd phi_from_gap(double a, double b, const basis::MoranBasis& basis) {
  const std::size_t r = basis.rank();
  std::vector<double> angles(basis.g_angles.size());
  for (std::size_t k = 0; k < angles.size(); ++k) angles[k] = gap_angle(a, b, basis.g_angles[k]);
  return basis::givens_reconstruct(angles, r);
}

Eigen::VectorXd floored_spectrum(const Eigen::VectorXd& lambda) {
  if (lambda.size() == 0) throw NumericalError("empty spectrum");
  const double top = lambda.maxCoeff();
  if (!(top > 0.0)) throw NumericalError("Lambda_Q is identically zero");
  return lambda.cwiseMax(1e-10 * top);
}

CovarianceFactor::CovarianceFactor(Eigen::MatrixXd rotation, Eigen::VectorXd spectrum, double phi)
    : rotation_(std::move(rotation)), spectrum_(std::move(spectrum)), phi_(phi) {
  if (!(phi_ > 0.0) || !std::isfinite(phi_)) throw NumericalError("phi must be positive and finite");
  if (rotation_.rows() != spectrum_.size() || rotation_.cols() != spectrum_.size()) {
    throw NumericalError("covariance factor dimension mismatch");
  }
}

Eigen::MatrixXd CovarianceFactor::matrix() const {
  Eigen::MatrixXd k = rotation_ * (phi_ * spectrum_).asDiagonal() * rotation_.transpose();
  return 0.5 * (k + k.transpose());
}

double CovarianceFactor::log_det() const {
  return static_cast<double>(spectrum_.size()) * std::log(phi_) + spectrum_.array().log().sum();
}

double CovarianceFactor::unscaled_quad_form(const Eigen::VectorXd& eta) const {
  const Eigen::VectorXd v = rotation_.transpose() * eta;
  return (v.array().square() / spectrum_.array()).sum();
}

double CovarianceFactor::quad_form(const Eigen::VectorXd& eta) const { return unscaled_quad_form(eta) / phi_; }

Eigen::VectorXd CovarianceFactor::solve(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd w = rotation_.transpose() * v;
  return rotation_ * (w.array() / (phi_ * spectrum_.array())).matrix();
}

CovarianceFactor k_matrix(const GapParams& params, const basis::MoranBasis& basis, PriorKind kind) {
  Eigen::VectorXd spectrum = floored_spectrum(basis.LambdaQ);
  if (kind == PriorKind::MI) return CovarianceFactor(basis.PhiQ, std::move(spectrum), params.phi);
  return CovarianceFactor(phi_from_gap(params.a, params.b, basis), std::move(spectrum), params.phi);
}

}  // namespace countcos::covariance
