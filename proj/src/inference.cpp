#include "countcos/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "countcos/errors.hpp"

namespace countcos::inference {

double quantile(std::vector<double> sample, double prob) {
  if (sample.empty()) throw DataError("quantile of an empty sample");
  const double pos = prob * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample.size() - 1);
  std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(lo), sample.end());
  const double a = sample[lo];
  double b = a;
  if (hi != lo) b = *std::min_element(sample.begin() + static_cast<std::ptrdiff_t>(hi), sample.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

CosResult summarize_draws(const DrawMatrix& draws, std::vector<std::string> ids, const CosOptions& options) {
  if (!(options.level > 0.0 && options.level < 1.0)) throw ConfigError("credible level must be in (0,1)");
  const Eigen::Index K = draws.rows();
  const Eigen::Index M = draws.cols();
  if (K == 0) throw DataError("no posterior draws");
  CosResult out;
  out.target_ids = std::move(ids);
  out.level = options.level;
  out.mean = draws.colwise().mean().transpose();
  out.variance.resize(M);
  out.lower.resize(M);
  out.upper.resize(M);
  const double tail = 0.5 * (1.0 - options.level);
  std::vector<double> column(static_cast<std::size_t>(K));
  for (Eigen::Index m = 0; m < M; ++m) {
    double ss = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double v = draws(k, m);
      column[static_cast<std::size_t>(k)] = v;
      ss += (v - out.mean(m)) * (v - out.mean(m));
    }
    out.variance(m) = K > 1 ? ss / static_cast<double>(K - 1) : 0.0;
    out.lower(m) = quantile(column, tail);
    out.upper(m) = quantile(column, 1.0 - tail);
  }
  if (options.keep_draws) out.draws = draws;
  return out;
}

CosResult cos_posterior(const DrawMatrix& mu1, std::uint64_t source_checksum, const geometry::CosWeightMatrix& weights,
                        const CosOptions& options) {
  if (source_checksum != weights.source_checksum) {
    std::ostringstream msg;
    msg << "weights were built against a different source support (checksum " << std::hex << weights.source_checksum
        << ", draws " << source_checksum << ")";
    throw DataError(msg.str());
  }
  if (mu1.cols() != weights.H.cols()) throw DataError("weights and draws disagree on the number of source units");
  // (H mu_k)' for all k at once: K x M
  const DrawMatrix projected = mu1 * weights.H.transpose();
  return summarize_draws(projected, weights.target_ids, options);
}

Eigen::VectorXd simple_areal_interpolation(const Eigen::VectorXd& counts, const geometry::CosWeightMatrix& weights) {
  if (counts.size() != weights.H.cols()) throw DataError("counts and weights disagree on the number of source units");
  return weights.H * counts;
}

double pvalue_from_log_ratios(std::span<const double> log_ratios) {
  if (log_ratios.empty()) throw DataError("no likelihood ratios");
  double score = 0.0;
  for (double r : log_ratios) {
    if (r > 0.0) {
      score += 1.0;
    } else if (r == 0.0) {
      score += 0.5;
    }
  }
  return score / static_cast<double>(log_ratios.size());
}

double posterior_predictive_pvalue(const sampler::PosteriorDraws& draws, const model::Model& model,
                                   std::uint64_t seed) {
  const auto& data = model.data();
  std::vector<double> log_ratios(draws.size());
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const auto& state = draws.states[k];
    const model::LatentMeans means = model.latent_means(state);
    const model::Replicate rep = model.simulate_replicate(means, state, rng);
    const double observed = model.data_log_density(data.counts(), data.log_variances(), means, state);
    const double replicate = model.data_log_density(rep.counts, rep.log_variances, means, state);
    log_ratios[k] = replicate - observed;
  }
  return pvalue_from_log_ratios(log_ratios);
}

double pad(std::span<const double> estimates_md, std::span<const double> estimates_cs, std::span<const double> truth) {
  if (estimates_md.size() != truth.size() || estimates_cs.size() != truth.size()) {
    throw DataError("PAD inputs differ in length");
  }
  if (truth.empty()) throw DataError("PAD of zero targets");
  double md = 0.0;
  double cs = 0.0;
  for (std::size_t m = 0; m < truth.size(); ++m) {
    md += std::fabs(truth[m] - estimates_md[m]);
    cs += std::fabs(truth[m] - estimates_cs[m]);
  }
  return (md - cs) / static_cast<double>(truth.size());
}

double sign_test_pvalue(std::size_t successes, std::size_t trials) {
  if (successes > trials) throw DataError("more successes than trials");
  // sum_{j >= s} C(n, j) 2^-n via log-binomials
  const double n = static_cast<double>(trials);
  double total = 0.0;
  for (std::size_t j = successes; j <= trials; ++j) {
    const double jj = static_cast<double>(j);
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(jj + 1.0) - std::lgamma(n - jj + 1.0) - n * std::log(2.0));
  }
  return std::min(total, 1.0);
}

}  // namespace countcos::inference
