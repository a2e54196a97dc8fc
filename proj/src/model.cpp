#include "countcos/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace countcos::model {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double normal_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) - 0.5 * d * d / variance;
}

}  // namespace

covariance::PriorKind prior_kind(ModelKind kind) noexcept {
  return kind == ModelKind::MI ? covariance::PriorKind::MI : covariance::PriorKind::GAP;
}

bool uses_variance_model(ModelKind kind) noexcept { return kind != ModelKind::VR; }

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::CS: return "CS";
    case ModelKind::VR: return "VR";
    case ModelKind::MI: return "MI";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "CS") return ModelKind::CS;
  if (name == "VR") return ModelKind::VR;
  if (name == "MI") return ModelKind::MI;
  throw ConfigError("unknown model kind '" + name + "' (expected CS, VR or MI)");
}

// ---------------------------------------------------------------------------

Eigen::VectorXd Hyperparameters::beta_mean(std::size_t p) const {
  if (mu_beta.size() == 0) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  return mu_beta;
}

void Hyperparameters::validate(std::size_t p) const {
  if (mu_beta.size() != 0 && static_cast<std::size_t>(mu_beta.size()) != p) {
    throw ConfigError("mu_beta length does not match the number of covariates");
  }
  for (double v : {sigma2_beta, alpha_phi, omega_phi, sigma2_Phi, alpha_eps, omega_eps, alpha_gamma, omega_gamma}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("hyperparameter scales must be positive and finite");
  }
}

// ---------------------------------------------------------------------------

SurveyDataset::SurveyDataset(std::size_t n1, std::vector<SupportData> levels) : n1_(n1), levels_(std::move(levels)) {
  if (levels_.empty() || levels_.front().level != 1) throw DataError("survey data must start with level 1");
  if (levels_.front().ids.size() != n1_) throw DataError("level-1 data must cover every level-1 unit");
  has_variances_ = true;
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    const auto& s = levels_[l];
    const auto n = s.ids.size();
    if (static_cast<std::size_t>(s.counts.size()) != n) throw DataError("count vector length mismatch");
    if (s.variances.size() != 0 && static_cast<std::size_t>(s.variances.size()) != n) {
      throw DataError("variance vector length mismatch");
    }
    if (s.variances.size() == 0) has_variances_ = false;
    if (l > 0 && (static_cast<std::size_t>(s.weights.rows()) != n || static_cast<std::size_t>(s.weights.cols()) != n1_)) {
      throw DataError("coarse weight matrix has the wrong shape for level " + std::to_string(s.level));
    }
    offsets_.push_back(counts_.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double z = s.counts(static_cast<Eigen::Index>(i));
      if (!(z >= 0.0) || !std::isfinite(z)) throw DataError("count for '" + s.ids[i] + "' is negative or non-finite");
      counts_.push_back(z);
      obs_level_.push_back(l);
      double logv = std::numeric_limits<double>::quiet_NaN();
      if (s.variances.size() != 0) {
        const double v = s.variances(static_cast<Eigen::Index>(i));
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw DataError("variance for '" + s.ids[i] + "' is negative or non-finite");
        }
        if (v == 0.0) {
          warnings_.push_back("zero survey variance for '" + s.ids[i] + "'; variance term dropped");
        } else {
          logv = std::log(v);
        }
      }
      log_variances_.push_back(logv);
    }
    if (l > 0) columns_.emplace_back(s.weights);
  }
}

bool SurveyDataset::variance_active(std::size_t obs) const { return !std::isnan(log_variances_.at(obs)); }

// ---------------------------------------------------------------------------

bool ModelState::valid() const {
  if (!(phi > 0.0) || !(sigma2_gamma > 0.0)) return false;
  for (Eigen::Index k = 0; k < sigma2_eps.size(); ++k) {
    if (!(sigma2_eps(k) > 0.0)) return false;
  }
  return beta.allFinite() && eta.allFinite() && xi.allFinite() && std::isfinite(a) && std::isfinite(b);
}

double ig_log_kernel(double x, double alpha, double omega) {
  return -(alpha + 1.0) * std::log(x) - omega / x;
}

double ig_log_density(double x, double alpha, double omega) {
  return alpha * std::log(omega) - std::lgamma(alpha) + ig_log_kernel(x, alpha, omega);
}

// ---------------------------------------------------------------------------

Model::Model(const basis::CovariateMatrix& covariates, const basis::MoranBasis& basis, const SurveyDataset& data,
             Hyperparameters hyper, ModelKind kind)
    : covariates_(&covariates), basis_(&basis), data_(&data), hyper_(std::move(hyper)), kind_(kind) {
  if (covariates.rows() != data.n1() || basis.n() != data.n1()) {
    throw DataError("covariates, basis and data disagree on the number of level-1 units");
  }
  hyper_.validate(covariates.cols());
  if (uses_variance_model(kind_) && !data.has_variances()) {
    throw DataError("model kind " + to_string(kind_) + " requires survey variances on every support");
  }
}

void Model::observation_means(const Eigen::VectorXd& mu1, const Eigen::VectorXd& Y1, Eigen::VectorXd& obs_mu,
                              Eigen::VectorXd& obs_logmu) const {
  const auto n_obs = static_cast<Eigen::Index>(data_->n_obs());
  obs_mu.resize(n_obs);
  obs_logmu.resize(n_obs);
  const auto n_fine = static_cast<Eigen::Index>(data_->n1());
  obs_mu.head(n_fine) = mu1;
  obs_logmu.head(n_fine) = Y1;
  const auto& levels = data_->levels();
  for (std::size_t l = 1; l < levels.size(); ++l) {
    const auto off = static_cast<Eigen::Index>(data_->offset(l));
    const Eigen::VectorXd coarse = levels[l].weights * mu1;
    obs_mu.segment(off, coarse.size()) = coarse;
    obs_logmu.segment(off, coarse.size()) = coarse.array().log();
  }
}

LatentMeans Model::latent_means(const ModelState& state) const {
  LatentMeans m;
  m.Y1 = covariates_->X * state.beta + basis_->Psi * state.eta + state.xi;
  if (!m.Y1.allFinite() || m.Y1.cwiseAbs().maxCoeff() > kOverflowGuard) {
    throw NumericalError("log-mean outside the overflow guard");
  }
  m.mu1 = m.Y1.array().exp();
  observation_means(m.mu1, m.Y1, m.obs_mu, m.obs_logmu);
  return m;
}

double Model::obs_log_lik(std::size_t obs, double mu, double logmu, double sigma2_eps) const {
  const double z = data_->counts()[obs];
  double ll;
  if (mu <= 0.0) {
    ll = z > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
  } else {
    ll = z * logmu - mu;
  }
  if (uses_variance_model(kind_) && data_->variance_active(obs)) {
    if (mu <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += normal_log_density(data_->log_variances()[obs], logmu, sigma2_eps);
  }
  return ll;
}

double Model::log_lik_counts(const LatentMeans& means) const {
  const auto& z = data_->counts();
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double mu = means.obs_mu(static_cast<Eigen::Index>(k));
    if (mu <= 0.0) {
      if (z[k] > 0.0) return -std::numeric_limits<double>::infinity();
      continue;
    }
    total += z[k] * means.obs_logmu(static_cast<Eigen::Index>(k)) - mu;
  }
  return total;
}

double Model::log_lik_variances(const LatentMeans& means, const ModelState& state) const {
  if (!uses_variance_model(kind_)) return 0.0;
  const auto& lv = data_->log_variances();
  double total = 0.0;
  for (std::size_t k = 0; k < lv.size(); ++k) {
    if (std::isnan(lv[k])) continue;
    const auto kk = static_cast<Eigen::Index>(k);
    if (means.obs_mu(kk) <= 0.0) return -std::numeric_limits<double>::infinity();
    total += normal_log_density(lv[k], means.obs_logmu(kk), state.sigma2_eps(kk));
  }
  return total;
}

covariance::CovarianceFactor Model::covariance(const ModelState& state) const {
  return covariance::k_matrix({state.a, state.b, state.phi}, *basis_, prior_kind(kind_));
}

double Model::log_prior(const ModelState& state) const {
  if (!(state.phi > 0.0) || !(state.sigma2_gamma > 0.0)) throw NumericalError("non-positive scale parameter");
  const auto p = static_cast<double>(this->p());
  const auto r = static_cast<double>(this->r());
  const auto n1 = static_cast<double>(this->n1());
  double total = 0.0;

  const Eigen::VectorXd db = state.beta - hyper_.beta_mean(this->p());
  total += -0.5 * p * (kLog2Pi + std::log(hyper_.sigma2_beta)) - 0.5 * db.squaredNorm() / hyper_.sigma2_beta;

  const auto k = covariance(state);
  total += -0.5 * r * kLog2Pi - 0.5 * k.log_det() - 0.5 * k.quad_form(state.eta);

  total += -0.5 * n1 * (kLog2Pi + std::log(state.sigma2_gamma)) - 0.5 * state.xi.squaredNorm() / state.sigma2_gamma;

  if (prior_kind(kind_) == covariance::PriorKind::GAP) {
    const Eigen::Vector2d dab = Eigen::Vector2d(state.a, state.b) - hyper_.mu_Phi;
    total += -(kLog2Pi + std::log(hyper_.sigma2_Phi)) - 0.5 * dab.squaredNorm() / hyper_.sigma2_Phi;
  }

  total += ig_log_density(state.phi, hyper_.alpha_phi, hyper_.omega_phi);
  if (uses_variance_model(kind_)) {
    for (Eigen::Index i = 0; i < state.sigma2_eps.size(); ++i) {
      const double s = state.sigma2_eps(i);
      if (!(s > 0.0)) throw NumericalError("non-positive sigma2_eps");
      total += ig_log_density(s, hyper_.alpha_eps, hyper_.omega_eps);
    }
  }
  total += ig_log_density(state.sigma2_gamma, hyper_.alpha_gamma, hyper_.omega_gamma);
  return total;
}

double Model::log_posterior(const ModelState& state) const {
  LatentMeans means;
  try {
    means = latent_means(state);
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
  return log_lik_counts(means) + log_lik_variances(means, state) + log_prior(state);
}

double Model::data_log_density(std::span<const double> counts, std::span<const double> log_variances,
                               const LatentMeans& means, const ModelState& state) const {
  double total = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double mu = means.obs_mu(kk);
    const double z = counts[k];
    if (mu <= 0.0) {
      if (z > 0.0) return -std::numeric_limits<double>::infinity();
    } else {
      total += z * means.obs_logmu(kk) - mu - std::lgamma(z + 1.0);
    }
    if (uses_variance_model(kind_) && !std::isnan(log_variances[k])) {
      total += normal_log_density(log_variances[k], means.obs_logmu(kk), state.sigma2_eps(kk));
    }
  }
  return total;
}

Replicate Model::simulate_replicate(const LatentMeans& means, const ModelState& state, std::mt19937_64& rng) const {
  const std::size_t n_obs = data_->n_obs();
  Replicate rep;
  rep.counts.resize(n_obs);
  rep.log_variances.assign(n_obs, std::numeric_limits<double>::quiet_NaN());
  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < n_obs; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double mu = means.obs_mu(kk);
    rep.counts[k] = mu > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mu)(rng)) : 0.0;
    if (uses_variance_model(kind_) && data_->variance_active(k)) {
      rep.log_variances[k] = means.obs_logmu(kk) + std::sqrt(state.sigma2_eps(kk)) * normal(rng);
    }
  }
  return rep;
}

}  // namespace countcos::model
