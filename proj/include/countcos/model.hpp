#pragma once

/// @file model.hpp
/// @brief Log-density of the Poisson change-of-support model.
///
///   Z(A_{l,i})            ~ Pois(mu(A_{l,i}))
///   log sigma^2_{l,i}     ~ Normal(log mu(A_{l,i}), sigma^2_{eps,l,i})   (CS, MI)
///   Y_1 = X beta + Psi eta + xi,  mu_1 = exp(Y_1),  mu_l = H_l mu_1  (l >= 2)
///   eta ~ Gaussian(0, K),  xi_i ~ Normal(0, sigma^2_gamma)
///   beta ~ Gaussian(mu_beta, sigma^2_beta I), (a,b) ~ Gaussian(mu_Phi, sigma^2_Phi I)   (GAP only)
///   phi, sigma^2_eps, sigma^2_gamma ~ inverse gamma
///
/// Observations are flattened level-major: all level-1 units first (in
/// level-1 order), then level 2, and so on.

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "countcos/basis.hpp"
#include "countcos/covariance.hpp"
#include "countcos/errors.hpp"

namespace countcos::model {

enum class ModelKind { CS, VR, MI };

[[nodiscard]] covariance::PriorKind prior_kind(ModelKind kind) noexcept;
[[nodiscard]] bool uses_variance_model(ModelKind kind) noexcept;
[[nodiscard]] std::string to_string(ModelKind kind);
[[nodiscard]] ModelKind parse_model_kind(const std::string& name);

struct Hyperparameters {
  Eigen::VectorXd mu_beta;  ///< empty means the zero vector
  double sigma2_beta = 1e15;
  double alpha_phi = 1.0;
  double omega_phi = 1.0;
  Eigen::Vector2d mu_Phi{0.0, 1.0};
  double sigma2_Phi = 1e15;
  double alpha_eps = 1.0;
  double omega_eps = 1.0;
  double alpha_gamma = 1.0;
  double omega_gamma = 1.0;

  [[nodiscard]] Eigen::VectorXd beta_mean(std::size_t p) const;
  void validate(std::size_t p) const;
};

/// Counts and survey variances on one support. For level 1 the ids are
/// the level-1 unit ids in order and `weights` is unused; coarser levels
/// carry the n_l x n1 change-of-support matrix onto level 1.
struct SupportData {
  int level = 1;
  std::vector<std::string> ids;
  Eigen::VectorXd counts;
  Eigen::VectorXd variances;  ///< empty when no variances were supplied
  Eigen::SparseMatrix<double, Eigen::RowMajor> weights;
};

class SurveyDataset {
 public:
  SurveyDataset() = default;
  SurveyDataset(std::size_t n1, std::vector<SupportData> levels);

  [[nodiscard]] std::size_t n1() const noexcept { return n1_; }
  [[nodiscard]] std::size_t n_obs() const noexcept { return counts_.size(); }
  [[nodiscard]] const std::vector<SupportData>& levels() const noexcept { return levels_; }
  [[nodiscard]] bool has_variances() const noexcept { return has_variances_; }

  [[nodiscard]] std::size_t level_of(std::size_t obs) const { return obs_level_.at(obs); }
  [[nodiscard]] std::size_t offset(std::size_t level_index) const { return offsets_.at(level_index); }

  /// Flattened counts and log-variances; log-variance is NaN where the
  /// variance is zero or absent (such terms are dropped).
  [[nodiscard]] const std::vector<double>& counts() const noexcept { return counts_; }
  [[nodiscard]] const std::vector<double>& log_variances() const noexcept { return log_variances_; }
  [[nodiscard]] bool variance_active(std::size_t obs) const;

  /// Column view of each coarse weight matrix (index = level index - 1).
  [[nodiscard]] const std::vector<Eigen::SparseMatrix<double>>& coarse_columns() const noexcept { return columns_; }

  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  std::size_t n1_ = 0;
  std::vector<SupportData> levels_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> obs_level_;
  std::vector<double> counts_;
  std::vector<double> log_variances_;
  std::vector<Eigen::SparseMatrix<double>> columns_;
  std::vector<std::string> warnings_;
  bool has_variances_ = false;
};

struct ModelState {
  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  Eigen::VectorXd xi;
  double a = 0.0;
  double b = 1.0;
  double phi = 1.0;
  Eigen::VectorXd sigma2_eps;  ///< one per observation
  double sigma2_gamma = 1.0;

  [[nodiscard]] bool valid() const;
};

/// |Y| beyond this is treated as a non-finite state.
inline constexpr double kOverflowGuard = 700.0;

struct LatentMeans {
  Eigen::VectorXd Y1;   ///< X beta + Psi eta + xi
  Eigen::VectorXd mu1;  ///< exp(Y1)
  Eigen::VectorXd obs_mu;     ///< mu(A_{l,i}) per observation
  Eigen::VectorXd obs_logmu;  ///< log mu(A_{l,i}) per observation
};

/// IG(alpha, omega) kernel -(alpha+1) log x - omega/x.
[[nodiscard]] double ig_log_kernel(double x, double alpha, double omega);
/// Normalised IG(alpha, omega) log-density.
[[nodiscard]] double ig_log_density(double x, double alpha, double omega);

/// Data-model replicate at a given latent state.
struct Replicate {
  std::vector<double> counts;
  std::vector<double> log_variances;  ///< NaN where the observed term is dropped
};

/// Bundles the fixed model ingredients. Holds non-owning references: the
/// covariates, basis and dataset must outlive the Model.
class Model {
 public:
  Model(const basis::CovariateMatrix& covariates, const basis::MoranBasis& basis, const SurveyDataset& data,
        Hyperparameters hyper, ModelKind kind);

  [[nodiscard]] const basis::CovariateMatrix& covariates() const noexcept { return *covariates_; }
  [[nodiscard]] const basis::MoranBasis& basis() const noexcept { return *basis_; }
  [[nodiscard]] const SurveyDataset& data() const noexcept { return *data_; }
  [[nodiscard]] const Hyperparameters& hyper() const noexcept { return hyper_; }
  [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t n1() const noexcept { return data_->n1(); }
  [[nodiscard]] std::size_t p() const noexcept { return covariates_->cols(); }
  [[nodiscard]] std::size_t r() const noexcept { return basis_->rank(); }

  /// Throws NumericalError when any |Y1| exceeds kOverflowGuard.
  [[nodiscard]] LatentMeans latent_means(const ModelState& state) const;
  /// Observation-level means from a level-1 mean vector (no guard).
  void observation_means(const Eigen::VectorXd& mu1, const Eigen::VectorXd& Y1, Eigen::VectorXd& obs_mu,
                         Eigen::VectorXd& obs_logmu) const;

  /// sum Z log mu - mu (log-factorials omitted).
  [[nodiscard]] double log_lik_counts(const LatentMeans& means) const;
  /// sum of Normal(log sigma^2; log mu, sigma^2_eps) log-densities; 0 under VR.
  [[nodiscard]] double log_lik_variances(const LatentMeans& means, const ModelState& state) const;
  [[nodiscard]] double log_prior(const ModelState& state) const;
  [[nodiscard]] double log_posterior(const ModelState& state) const;

  /// Likelihood contribution of one observation.
  [[nodiscard]] double obs_log_lik(std::size_t obs, double mu, double logmu, double sigma2_eps) const;

  [[nodiscard]] covariance::CovarianceFactor covariance(const ModelState& state) const;

  /// Log-density of a dataset (counts + log-variances, with all
  /// normalising constants) at the given means and state.
  [[nodiscard]] double data_log_density(std::span<const double> counts, std::span<const double> log_variances,
                                        const LatentMeans& means, const ModelState& state) const;

  /// Draws (Z*, log sigma^2*) from the data models at `means`.
  [[nodiscard]] Replicate simulate_replicate(const LatentMeans& means, const ModelState& state,
                                             std::mt19937_64& rng) const;

 private:
  const basis::CovariateMatrix* covariates_;
  const basis::MoranBasis* basis_;
  const SurveyDataset* data_;
  Hyperparameters hyper_;
  ModelKind kind_;
};

}  // namespace countcos::model
