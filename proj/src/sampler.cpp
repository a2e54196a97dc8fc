#include "countcos/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "countcos/diagnostics.hpp"
#include "countcos/hash.hpp"

namespace countcos::sampler {

// ---------------------------------------------------------------------------
// Configuration

void SamplerConfig::validate() const {
  std::vector<std::string> problems;
  if (iterations == 0) problems.emplace_back("iterations must be positive");
  if (burn_in >= iterations) problems.emplace_back("burn_in must be smaller than iterations");
  if (thin == 0) problems.emplace_back("thin must be positive");
  if (chains == 0) problems.emplace_back("chains must be positive");
  if (eta_block_size == 0) problems.emplace_back("eta_block_size must be positive");
  for (auto [name, v] : {std::pair{"eta_scale", eta_scale}, std::pair{"beta_scale", beta_scale},
                         std::pair{"xi_scale", xi_scale}, std::pair{"ab_scale", ab_scale}}) {
    if (!(v > 0.0) || !std::isfinite(v)) problems.emplace_back(std::string(name) + " must be positive");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) problems.emplace_back("target_accept must be in (0,1)");
  if (!(target_accept_scalar > 0.0 && target_accept_scalar < 1.0)) {
    problems.emplace_back("target_accept_scalar must be in (0,1)");
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid sampler configuration:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ConfigError(msg.str());
  }
}

std::uint64_t SamplerConfig::fingerprint() const {
  Fnv1a h;
  for (std::size_t v : {iterations, burn_in, thin, chains, eta_block_size}) h.update(static_cast<std::uint64_t>(v));
  h.update(seed);
  for (double v : {eta_scale, beta_scale, xi_scale, ab_scale, target_accept, target_accept_scalar, rhat_threshold}) {
    h.update(v);
  }
  h.update(static_cast<std::uint64_t>(adapt));
  h.update(static_cast<std::uint64_t>(fail_on_rhat));
  return h.digest();
}

// ---------------------------------------------------------------------------
// Elementary pieces

bool mh_accept(double log_post_new, double log_post_old, double log_q_ratio, double u) noexcept {
  const double log_alpha = log_post_new - log_post_old + log_q_ratio;
  if (std::isnan(log_alpha)) return false;
  return std::log(u) < log_alpha;
}

double InverseGamma::mean() const { return shape > 1.0 ? scale / (shape - 1.0) : std::numeric_limits<double>::infinity(); }

double InverseGamma::variance() const {
  if (shape <= 2.0) return std::numeric_limits<double>::infinity();
  return scale * scale / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
}

double draw_inverse_gamma(const InverseGamma& ig, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(ig.shape, 1.0 / ig.scale);
  double g = gamma(rng);
  // guard against an underflowed gamma draw
  if (!(g > 0.0)) g = std::numeric_limits<double>::min();
  return 1.0 / g;
}

InverseGamma phi_conditional(const model::Hyperparameters& hyper, std::size_t r, double unscaled_quad) {
  return {0.5 * static_cast<double>(r) + hyper.alpha_phi, hyper.omega_phi + 0.5 * unscaled_quad};
}

InverseGamma sigma2_eps_conditional(const model::Hyperparameters& hyper, double log_variance, double log_mean) {
  const double d = log_variance - log_mean;
  return {0.5 + hyper.alpha_eps, hyper.omega_eps + 0.5 * d * d};
}

InverseGamma sigma2_gamma_conditional(const model::Hyperparameters& hyper, const Eigen::VectorXd& xi) {
  return {0.5 * static_cast<double>(xi.size()) + hyper.alpha_gamma, hyper.omega_gamma + 0.5 * xi.squaredNorm()};
}

model::ModelState initial_state(const model::Model& model) {
  const auto& X = model.covariates().X;
  const auto n1 = static_cast<Eigen::Index>(model.n1());
  Eigen::VectorXd target(n1);
  for (Eigen::Index i = 0; i < n1; ++i) target(i) = std::log(model.data().counts()[static_cast<std::size_t>(i)] + 0.5);

  model::ModelState s;
  s.beta = X.colPivHouseholderQr().solve(target);
  s.eta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.r()));
  s.xi = Eigen::VectorXd::Zero(n1);
  s.a = model.hyper().mu_Phi(0);
  s.b = model.hyper().mu_Phi(1);
  s.phi = 1.0;
  s.sigma2_eps = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(model.data().n_obs()));
  s.sigma2_gamma = 1.0;
  return s;
}

// ---------------------------------------------------------------------------
// GibbsSampler

GibbsSampler::GibbsSampler(const model::Model& model, model::ModelState init, const SamplerConfig& config,
                           std::uint64_t stream_seed, BlockMask mask)
    : model_(&model), config_(config), mask_(mask), state_(std::move(init)), rng_(stream_seed) {
  const auto r = static_cast<Eigen::Index>(model.r());
  const auto block = static_cast<Eigen::Index>(config.eta_block_size);
  const Eigen::Index n_blocks = (r + block - 1) / block;
  for (Eigen::Index b = 0; b < n_blocks; ++b) {
    // near-equal contiguous blocks
    const Eigen::Index start = b * r / n_blocks;
    const Eigen::Index stop = (b + 1) * r / n_blocks;
    eta_blocks_.emplace_back(start, stop - start);
    stats_.push_back({"eta" + std::to_string(b), 0, 0, 0.0});
    log_scales_.push_back(std::log(config.eta_scale));
  }
  beta_block_ = stats_.size();
  stats_.push_back({"beta", 0, 0, 0.0});
  log_scales_.push_back(std::log(config.beta_scale));
  xi_block_ = stats_.size();
  stats_.push_back({"xi", 0, 0, 0.0});
  log_scales_.push_back(std::log(config.xi_scale));
  ab_block_ = stats_.size();
  stats_.push_back({"ab", 0, 0, 0.0});
  log_scales_.push_back(std::log(config.ab_scale));
  for (std::size_t k = 0; k < stats_.size(); ++k) stats_[k].scale = std::exp(log_scales_[k]);
  sweep_accept_.assign(stats_.size(), 0.0);

  spectrum_ = covariance::floored_spectrum(model.basis().LambdaQ);
  if (model::prior_kind(model.kind()) == covariance::PriorKind::MI) {
    rotation_ = model.basis().PhiQ;
  } else {
    rotation_ = covariance::phi_from_gap(state_.a, state_.b, model.basis());
  }
  refresh_caches();
}

void GibbsSampler::set_state(model::ModelState state) {
  state_ = std::move(state);
  if (model::prior_kind(model_->kind()) == covariance::PriorKind::GAP) {
    rotation_ = covariance::phi_from_gap(state_.a, state_.b, model_->basis());
  }
  refresh_caches();
}

void GibbsSampler::reset_stats() {
  for (auto& s : stats_) {
    s.proposed = 0;
    s.accepted = 0;
  }
}

void GibbsSampler::refresh_caches() {
  const auto& m = *model_;
  Y1_ = m.covariates().X * state_.beta + m.basis().Psi * state_.eta + state_.xi;
  if (!Y1_.allFinite() || Y1_.cwiseAbs().maxCoeff() > model::kOverflowGuard) {
    throw NumericalError("sampler state outside the overflow guard");
  }
  mu1_ = Y1_.array().exp();
  m.observation_means(mu1_, Y1_, obs_mu_, obs_logmu_);
  compute_observation_terms();
  const Eigen::VectorXd v = rotation_.transpose() * state_.eta;
  unscaled_quad_ = (v.array().square() / spectrum_.array()).sum();
}

void GibbsSampler::compute_observation_terms() {
  const auto n_obs = obs_mu_.size();
  obs_ll_.resize(n_obs);
  for (Eigen::Index k = 0; k < n_obs; ++k) {
    obs_ll_(k) = mask_.likelihood
                     ? model_->obs_log_lik(static_cast<std::size_t>(k), obs_mu_(k), obs_logmu_(k), state_.sigma2_eps(k))
                     : 0.0;
  }
  loglik_ = obs_ll_.sum();
}

bool GibbsSampler::propose_linear_shift(const Eigen::VectorXd& delta_y, double log_prior_ratio) {
  Eigen::VectorXd y = Y1_ + delta_y;
  if (!y.allFinite() || y.cwiseAbs().maxCoeff() > model::kOverflowGuard) return false;
  Eigen::VectorXd mu = y.array().exp();
  Eigen::VectorXd obs_mu, obs_logmu;
  model_->observation_means(mu, y, obs_mu, obs_logmu);
  Eigen::VectorXd ll(obs_mu.size());
  if (mask_.likelihood) {
    for (Eigen::Index k = 0; k < ll.size(); ++k) {
      ll(k) = model_->obs_log_lik(static_cast<std::size_t>(k), obs_mu(k), obs_logmu(k), state_.sigma2_eps(k));
    }
  } else {
    ll.setZero();
  }
  const double loglik_new = ll.sum();
  if (!mh_accept(loglik_new + log_prior_ratio, loglik_, 0.0, uniform_(rng_))) return false;
  Y1_ = std::move(y);
  mu1_ = std::move(mu);
  obs_mu_ = std::move(obs_mu);
  obs_logmu_ = std::move(obs_logmu);
  obs_ll_ = std::move(ll);
  loglik_ = loglik_new;
  return true;
}

void GibbsSampler::update_eta() {
  const auto& psi = model_->basis().Psi;
  for (std::size_t b = 0; b < eta_blocks_.size(); ++b) {
    const auto [start, len] = eta_blocks_[b];
    const double scale = std::exp(log_scales_[b]);
    Eigen::VectorXd step(len);
    for (Eigen::Index k = 0; k < len; ++k) step(k) = scale * normal_(rng_);
    Eigen::VectorXd eta_new = state_.eta;
    eta_new.segment(start, len) += step;
    const Eigen::VectorXd v = rotation_.transpose() * eta_new;
    const double quad_new = (v.array().square() / spectrum_.array()).sum();
    const double log_prior_ratio = -0.5 * (quad_new - unscaled_quad_) / state_.phi;
    const Eigen::VectorXd delta_y = psi.middleCols(start, len) * step;
    ++stats_[b].proposed;
    const bool ok = propose_linear_shift(delta_y, log_prior_ratio);
    if (ok) {
      ++stats_[b].accepted;
      state_.eta = std::move(eta_new);
      unscaled_quad_ = quad_new;
    }
    sweep_accept_[b] = ok ? 1.0 : 0.0;
  }
}

void GibbsSampler::update_beta() {
  const auto& hyper = model_->hyper();
  const double scale = std::exp(log_scales_[beta_block_]);
  Eigen::VectorXd step(state_.beta.size());
  for (Eigen::Index k = 0; k < step.size(); ++k) step(k) = scale * normal_(rng_);
  const Eigen::VectorXd mean = hyper.beta_mean(model_->p());
  const Eigen::VectorXd beta_new = state_.beta + step;
  const double log_prior_ratio =
      -0.5 * ((beta_new - mean).squaredNorm() - (state_.beta - mean).squaredNorm()) / hyper.sigma2_beta;
  ++stats_[beta_block_].proposed;
  const bool ok = propose_linear_shift(model_->covariates().X * step, log_prior_ratio);
  if (ok) {
    ++stats_[beta_block_].accepted;
    state_.beta = beta_new;
  }
  sweep_accept_[beta_block_] = ok ? 1.0 : 0.0;
}

void GibbsSampler::update_xi() {
  const auto& data = model_->data();
  const auto& columns = data.coarse_columns();
  const double scale = std::exp(log_scales_[xi_block_]);
  const auto n1 = static_cast<Eigen::Index>(model_->n1());
  std::vector<std::pair<Eigen::Index, double>> coarse_changes;  // (obs, new mu)
  std::size_t accepted = 0;
  for (Eigen::Index i = 0; i < n1; ++i) {
    const double step = scale * normal_(rng_);
    const double xi_new = state_.xi(i) + step;
    const double y_new = Y1_(i) + step;
    ++stats_[xi_block_].proposed;
    if (!std::isfinite(y_new) || std::fabs(y_new) > model::kOverflowGuard) continue;
    const double mu_new = std::exp(y_new);
    const double d_mu = mu_new - mu1_(i);

    double ll_delta = 0.0;
    double ll_i = 0.0;
    coarse_changes.clear();
    if (mask_.likelihood) {
      ll_i = model_->obs_log_lik(static_cast<std::size_t>(i), mu_new, y_new, state_.sigma2_eps(i));
      ll_delta = ll_i - obs_ll_(i);
      for (std::size_t l = 0; l < columns.size(); ++l) {
        const auto off = static_cast<Eigen::Index>(data.offset(l + 1));
        for (Eigen::SparseMatrix<double>::InnerIterator it(columns[l], i); it; ++it) {
          const Eigen::Index obs = off + it.row();
          const double m = obs_mu_(obs) + it.value() * d_mu;
          coarse_changes.emplace_back(obs, m);
          ll_delta += model_->obs_log_lik(static_cast<std::size_t>(obs), m, std::log(m), state_.sigma2_eps(obs)) -
                      obs_ll_(obs);
        }
      }
    }
    const double log_prior_ratio = -0.5 * (xi_new * xi_new - state_.xi(i) * state_.xi(i)) / state_.sigma2_gamma;
    if (!mh_accept(ll_delta + log_prior_ratio, 0.0, 0.0, uniform_(rng_))) continue;

    ++accepted;
    ++stats_[xi_block_].accepted;
    state_.xi(i) = xi_new;
    Y1_(i) = y_new;
    mu1_(i) = mu_new;
    obs_mu_(i) = mu_new;
    obs_logmu_(i) = y_new;
    if (mask_.likelihood) {
      obs_ll_(i) = ll_i;
      for (const auto& [obs, m] : coarse_changes) {
        obs_mu_(obs) = m;
        obs_logmu_(obs) = std::log(m);
        obs_ll_(obs) = model_->obs_log_lik(static_cast<std::size_t>(obs), m, obs_logmu_(obs), state_.sigma2_eps(obs));
      }
    }
    loglik_ += ll_delta;
  }
  sweep_accept_[xi_block_] = n1 > 0 ? static_cast<double>(accepted) / static_cast<double>(n1) : 0.0;
}

void GibbsSampler::update_ab() {
  const auto& hyper = model_->hyper();
  const double scale = std::exp(log_scales_[ab_block_]);
  const double a_new = state_.a + scale * normal_(rng_);
  const double b_new = state_.b + scale * normal_(rng_);
  const Eigen::MatrixXd rotation_new = covariance::phi_from_gap(a_new, b_new, model_->basis());
  const Eigen::VectorXd v = rotation_new.transpose() * state_.eta;
  const double quad_new = (v.array().square() / spectrum_.array()).sum();
  const Eigen::Vector2d d_new = Eigen::Vector2d(a_new, b_new) - hyper.mu_Phi;
  const Eigen::Vector2d d_old = Eigen::Vector2d(state_.a, state_.b) - hyper.mu_Phi;
  const double log_ratio = -0.5 * (quad_new - unscaled_quad_) / state_.phi -
                           0.5 * (d_new.squaredNorm() - d_old.squaredNorm()) / hyper.sigma2_Phi;
  ++stats_[ab_block_].proposed;
  const bool ok = mh_accept(log_ratio, 0.0, 0.0, uniform_(rng_));
  if (ok) {
    ++stats_[ab_block_].accepted;
    state_.a = a_new;
    state_.b = b_new;
    rotation_ = rotation_new;
    unscaled_quad_ = quad_new;
  }
  sweep_accept_[ab_block_] = ok ? 1.0 : 0.0;
}

void GibbsSampler::draw_conjugate() {
  const auto& hyper = model_->hyper();
  if (mask_.phi) {
    state_.phi = draw_inverse_gamma(phi_conditional(hyper, model_->r(), unscaled_quad_), rng_);
  }
  if (mask_.sigma2_eps && model::uses_variance_model(model_->kind())) {
    const auto& data = model_->data();
    for (Eigen::Index k = 0; k < state_.sigma2_eps.size(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      InverseGamma ig{hyper.alpha_eps, hyper.omega_eps};
      if (mask_.likelihood && data.variance_active(kk)) {
        ig = sigma2_eps_conditional(hyper, data.log_variances()[kk], obs_logmu_(k));
      }
      state_.sigma2_eps(k) = draw_inverse_gamma(ig, rng_);
    }
    compute_observation_terms();
  }
  if (mask_.sigma2_gamma) {
    state_.sigma2_gamma = draw_inverse_gamma(sigma2_gamma_conditional(hyper, state_.xi), rng_);
  }
}

void GibbsSampler::adapt_scale(std::size_t block, double accept_fraction, double target) {
  const double gain = std::pow(static_cast<double>(adapt_step_) + 1.0, -0.6);
  log_scales_[block] = std::clamp(log_scales_[block] + gain * (accept_fraction - target), -20.0, 5.0);
  stats_[block].scale = std::exp(log_scales_[block]);
}

void GibbsSampler::sweep() {
  refresh_caches();
  const bool gap = model::prior_kind(model_->kind()) == covariance::PriorKind::GAP;
  if (mask_.eta) update_eta();
  if (mask_.beta) update_beta();
  if (mask_.xi) update_xi();
  if (mask_.ab && gap) update_ab();
  draw_conjugate();

  if (adapting_) {
    auto target_for = [this](Eigen::Index dim) {
      return dim > 1 ? config_.target_accept : config_.target_accept_scalar;
    };
    if (mask_.eta) {
      for (std::size_t b = 0; b < eta_blocks_.size(); ++b) {
        adapt_scale(b, sweep_accept_[b], target_for(eta_blocks_[b].second));
      }
    }
    if (mask_.beta) adapt_scale(beta_block_, sweep_accept_[beta_block_], target_for(state_.beta.size()));
    if (mask_.xi) adapt_scale(xi_block_, sweep_accept_[xi_block_], config_.target_accept_scalar);
    if (mask_.ab && gap) adapt_scale(ab_block_, sweep_accept_[ab_block_], config_.target_accept);
    ++adapt_step_;
  }
}

model::ModelState gibbs_sweep(const model::Model& model, const model::ModelState& state, std::uint64_t seed,
                              BlockMask mask) {
  SamplerConfig config;
  GibbsSampler sampler(model, state, config, seed, mask);
  sampler.sweep();
  return sampler.state();
}

// ---------------------------------------------------------------------------
// Chains

std::uint64_t chain_seed(std::uint64_t master, std::size_t chain) noexcept {
  // splitmix64 finaliser over (master, chain)
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(chain) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

struct ChainOutput {
  std::vector<model::ModelState> states;
  std::vector<Eigen::VectorXd> mu1;
  std::vector<BlockStats> stats;
  std::exception_ptr error;
};

void run_single_chain(const model::Model& model, const SamplerConfig& config, std::size_t chain, ChainOutput& out) {
  try {
    GibbsSampler sampler(model, initial_state(model), config, chain_seed(config.seed, chain));
    sampler.set_adapting(config.adapt);
    out.states.reserve(config.retained());
    out.mu1.reserve(config.retained());
    for (std::size_t t = 0; t < config.iterations; ++t) {
      if (t == config.burn_in) {
        sampler.set_adapting(false);
        sampler.reset_stats();
      }
      sampler.sweep();
      if (t >= config.burn_in && (t - config.burn_in) % config.thin == 0) {
        out.states.push_back(sampler.state());
        out.mu1.push_back(sampler.mu1());
      }
    }
    out.stats = sampler.stats();
  } catch (...) {
    out.error = std::current_exception();
  }
}

}  // namespace

PosteriorDraws run_chain(const model::Model& model, const SamplerConfig& config) {
  config.validate();
  std::vector<ChainOutput> outputs(config.chains);
  const std::size_t n_threads =
      std::min(config.chains, config.max_threads == 0 ? config.chains : config.max_threads);
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < config.chains; ++c) run_single_chain(model, config, c, outputs[c]);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t c = next++; c < config.chains; c = next++) run_single_chain(model, config, c, outputs[c]);
    };
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < n_threads; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
  }
  for (const auto& o : outputs) {
    if (o.error) std::rethrow_exception(o.error);
  }

  PosteriorDraws draws;
  draws.seed = config.seed;
  draws.config_fingerprint = config.fingerprint();
  draws.chains = config.chains;
  std::size_t total = 0;
  for (const auto& o : outputs) total += o.states.size();
  draws.mu1.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(model.n1()));
  draws.states.reserve(total);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < outputs.size(); ++c) {
    auto& o = outputs[c];
    for (std::size_t k = 0; k < o.states.size(); ++k, ++row) {
      draws.states.push_back(std::move(o.states[k]));
      draws.mu1.row(row) = o.mu1[k].transpose();
      draws.chain_of.push_back(static_cast<std::uint32_t>(c));
    }
    if (draws.acceptance.empty()) {
      draws.acceptance = o.stats;
    } else {
      for (std::size_t b = 0; b < o.stats.size(); ++b) {
        draws.acceptance[b].proposed += o.stats[b].proposed;
        draws.acceptance[b].accepted += o.stats[b].accepted;
      }
    }
  }
  const bool gap = model::prior_kind(model.kind()) == covariance::PriorKind::GAP;
  for (const auto& s : draws.acceptance) {
    if (s.name == "ab" && !gap) continue;
    if (s.proposed > 0 && s.rate() < 0.01) {
      draws.warnings.push_back("block '" + s.name + "' accepted fewer than 1% of proposals after burn-in");
    }
  }
  if (config.fail_on_rhat) {
    for (const auto& s : summarize(draws, gap)) {
      if (std::isfinite(s.rhat) && s.rhat > config.rhat_threshold) {
        throw NumericalError("split-Rhat of " + s.name + " is " + std::to_string(s.rhat) + " (threshold " +
                             std::to_string(config.rhat_threshold) + ")");
      }
    }
  }
  return draws;
}

}  // namespace countcos::sampler
