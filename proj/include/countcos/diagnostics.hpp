#pragma once

/// @file diagnostics.hpp
/// @brief Convergence diagnostics for scalar traces.

#include <span>
#include <string>
#include <vector>

#include "countcos/sampler.hpp"

namespace countcos::sampler {

/// Effective sample size by Geyer's initial positive sequence.
[[nodiscard]] double effective_sample_size(std::span<const double> trace);

/// Split-Rhat over chains of equal length (each chain is halved).
/// Returns NaN when the chains are too short or constant.
[[nodiscard]] double split_rhat(const std::vector<std::vector<double>>& chains);

struct ScalarSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  double rhat = 0.0;
};

/// Names of the monitored scalars: beta_k, phi, sigma2_gamma, a, b (GAP),
/// eta_0..eta_4 and log_total_mu.
[[nodiscard]] std::vector<std::string> monitored_names(const PosteriorDraws& draws, bool gap);

/// Trace of each monitored scalar, one row per draw in merge order.
[[nodiscard]] std::vector<std::vector<double>> monitored_traces(const PosteriorDraws& draws, bool gap);

[[nodiscard]] std::vector<ScalarSummary> summarize(const PosteriorDraws& draws, bool gap = true);

}  // namespace countcos::sampler
