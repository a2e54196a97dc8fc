#pragma once

/// @file inference.hpp
/// @brief Posterior change of support, predictive checks and evaluation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countcos/geometry.hpp"
#include "countcos/model.hpp"
#include "countcos/sampler.hpp"

namespace countcos::inference {

using DrawMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CosOptions {
  double level = 0.90;  ///< equal-tailed credible level
  bool keep_draws = false;
};

struct CosResult {
  std::vector<std::string> target_ids;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.90;
  /// K x M draws mu*_k(B_m) when requested.
  std::optional<DrawMatrix> draws;

  [[nodiscard]] std::size_t size() const noexcept { return target_ids.size(); }
};

/// Equal-tailed quantile (type 7 interpolation) of a sample.
[[nodiscard]] double quantile(std::vector<double> sample, double prob);

/// mu*_k(B_m) = h_B(m)' mu*_k for every draw; `mu1` is K x n1.
/// Throws DataError when `source_checksum` disagrees with weights.source_checksum.
[[nodiscard]] CosResult cos_posterior(const DrawMatrix& mu1, std::uint64_t source_checksum,
                                      const geometry::CosWeightMatrix& weights, const CosOptions& options = {});

/// Summaries of a K x M draw matrix.
[[nodiscard]] CosResult summarize_draws(const DrawMatrix& draws, std::vector<std::string> ids,
                                        const CosOptions& options = {});

/// h_B(m)' Z with Z the level-1 counts.
[[nodiscard]] Eigen::VectorXd simple_areal_interpolation(const Eigen::VectorXd& counts,
                                                         const geometry::CosWeightMatrix& weights);

/// Fraction of log-ratios > 0, ties counting one half.
[[nodiscard]] double pvalue_from_log_ratios(std::span<const double> log_ratios);

/// Per draw: simulate a replicate from the data models at that draw and
/// compare its log-density to the observed data's at the same draw.
[[nodiscard]] double posterior_predictive_pvalue(const sampler::PosteriorDraws& draws, const model::Model& model,
                                                 std::uint64_t seed);

/// mean |truth - md| - mean |truth - cs|. Throws DataError on length mismatch.
[[nodiscard]] double pad(std::span<const double> estimates_md, std::span<const double> estimates_cs,
                         std::span<const double> truth);

/// P(X >= successes) for X ~ Binomial(trials, 1/2).
[[nodiscard]] double sign_test_pvalue(std::size_t successes, std::size_t trials);

}  // namespace countcos::inference
