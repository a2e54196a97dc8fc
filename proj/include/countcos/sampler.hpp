#pragma once

/// @file sampler.hpp
/// @brief Metropolis-Hastings within Gibbs for the change-of-support model.
///
/// One sweep, in order: eta (random-walk blocks), beta (joint random walk),
/// xi (single-site random walk), (a,b) (joint random walk, GAP only), then
/// exact inverse-gamma draws of phi, each sigma^2_eps and sigma^2_gamma.
/// Proposal scales adapt by Robbins-Monro during burn-in and are frozen
/// afterwards.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countcos/covariance.hpp"
#include "countcos/model.hpp"

namespace countcos::sampler {

struct SamplerConfig {
  std::size_t iterations = 15000;
  std::size_t burn_in = 5000;
  std::size_t thin = 1;
  std::size_t chains = 1;
  std::uint64_t seed = 1;

  double eta_scale = 0.05;
  double beta_scale = 0.02;
  double xi_scale = 0.1;
  double ab_scale = 0.05;
  std::size_t eta_block_size = 25;

  bool adapt = true;
  double target_accept = 0.234;
  double target_accept_scalar = 0.44;

  /// Fail the run when any monitored scalar has split-Rhat above this.
  bool fail_on_rhat = false;
  double rhat_threshold = 1.1;

  /// Upper bound on concurrently running chains (0: one thread per chain).
  /// Does not affect the draws.
  std::size_t max_threads = 0;

  /// Throws ConfigError listing every problem.
  void validate() const;
  [[nodiscard]] std::uint64_t fingerprint() const;
  [[nodiscard]] std::size_t retained() const noexcept { return (iterations - burn_in + thin - 1) / thin; }
};

/// Accept iff log u < log_post_new - log_post_old + log_q_ratio.
[[nodiscard]] bool mh_accept(double log_post_new, double log_post_old, double log_q_ratio, double u) noexcept;

struct InverseGamma {
  double shape;
  double scale;
  [[nodiscard]] double mean() const;      ///< scale / (shape - 1), shape > 1
  [[nodiscard]] double variance() const;  ///< shape > 2
};

[[nodiscard]] double draw_inverse_gamma(const InverseGamma& ig, std::mt19937_64& rng);

/// Full conditionals of the conjugate blocks. `unscaled_quad` is
/// eta' Phi Lambda^{-1} Phi' eta at the current (a,b).
[[nodiscard]] InverseGamma phi_conditional(const model::Hyperparameters& hyper, std::size_t r, double unscaled_quad);
[[nodiscard]] InverseGamma sigma2_eps_conditional(const model::Hyperparameters& hyper, double log_variance,
                                                  double log_mean);
[[nodiscard]] InverseGamma sigma2_gamma_conditional(const model::Hyperparameters& hyper, const Eigen::VectorXd& xi);

/// Which updates a sweep performs. Disabling `likelihood` samples the
/// prior (used for prior-recovery checks).
struct BlockMask {
  bool eta = true;
  bool beta = true;
  bool xi = true;
  bool ab = true;
  bool phi = true;
  bool sigma2_eps = true;
  bool sigma2_gamma = true;
  bool likelihood = true;
};

struct BlockStats {
  std::string name;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double scale = 0.0;
  [[nodiscard]] double rate() const noexcept {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

/// Deterministic starting point: beta from least squares of log(Z + 0.5)
/// on X (level-1 observations), eta = 0, xi = 0, (a,b) = mu_Phi, phi = 1,
/// sigma^2_eps = 1, sigma^2_gamma = 1.
[[nodiscard]] model::ModelState initial_state(const model::Model& model);

class GibbsSampler {
 public:
  GibbsSampler(const model::Model& model, model::ModelState init, const SamplerConfig& config,
               std::uint64_t stream_seed, BlockMask mask = {});

  void sweep();

  /// Robbins-Monro scale updates after each sweep while enabled.
  void set_adapting(bool on) noexcept { adapting_ = on; }
  /// Zeroes the acceptance counters (scales are kept).
  void reset_stats();

  [[nodiscard]] const model::ModelState& state() const noexcept { return state_; }
  /// Replaces the state (e.g. after the data were resimulated).
  void set_state(model::ModelState state);
  [[nodiscard]] const Eigen::VectorXd& mu1() const noexcept { return mu1_; }
  [[nodiscard]] double log_likelihood() const noexcept { return loglik_; }
  [[nodiscard]] const std::vector<BlockStats>& stats() const noexcept { return stats_; }
  [[nodiscard]] std::mt19937_64& rng() noexcept { return rng_; }

 private:
  void refresh_caches();
  void compute_observation_terms();
  bool propose_linear_shift(const Eigen::VectorXd& delta_y, double log_prior_ratio);
  void update_eta();
  void update_beta();
  void update_xi();
  void update_ab();
  void draw_conjugate();
  void adapt_scale(std::size_t block, double accept_fraction, double target);

  const model::Model* model_;
  SamplerConfig config_;
  BlockMask mask_;
  model::ModelState state_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;

  // caches
  Eigen::VectorXd Y1_;
  Eigen::VectorXd mu1_;
  Eigen::VectorXd obs_mu_;
  Eigen::VectorXd obs_logmu_;
  Eigen::VectorXd obs_ll_;
  double loglik_ = 0.0;
  Eigen::MatrixXd rotation_;
  Eigen::VectorXd spectrum_;
  double unscaled_quad_ = 0.0;

  // proposal blocks: [eta blocks..., beta, xi, ab]
  std::vector<std::pair<Eigen::Index, Eigen::Index>> eta_blocks_;
  std::vector<BlockStats> stats_;
  std::vector<double> log_scales_;
  bool adapting_ = false;
  std::size_t adapt_step_ = 0;
  std::size_t beta_block_ = 0;
  std::size_t xi_block_ = 0;
  std::size_t ab_block_ = 0;
  std::vector<double> sweep_accept_;
};

/// One sweep from `state` with the default proposal scales.
[[nodiscard]] model::ModelState gibbs_sweep(const model::Model& model, const model::ModelState& state,
                                            std::uint64_t seed, BlockMask mask = {});

struct PosteriorDraws {
  std::vector<model::ModelState> states;
  /// K x n1, row k = exp(Y1) of draw k.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mu1;
  std::vector<std::uint32_t> chain_of;
  std::vector<BlockStats> acceptance;  ///< post burn-in, pooled over chains
  std::uint64_t seed = 0;
  std::uint64_t config_fingerprint = 0;
  std::size_t chains = 1;
  std::vector<std::string> warnings;

  [[nodiscard]] std::size_t size() const noexcept { return states.size(); }
};

/// Seed of chain `chain` derived from the master seed.
[[nodiscard]] std::uint64_t chain_seed(std::uint64_t master, std::size_t chain) noexcept;

/// Runs config.chains independent chains (concurrently) and merges their
/// retained draws in chain order. Bitwise deterministic given the seed.
[[nodiscard]] PosteriorDraws run_chain(const model::Model& model, const SamplerConfig& config);

}  // namespace countcos::sampler
