#pragma once

/// @file simulate.hpp
/// @brief Pseudo-household populations, stratified sampling and ground truth.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "countcos/geometry.hpp"
#include "countcos/model.hpp"

namespace countcos::simulate {

struct SimulationDesign {
  double x0 = 1.0;
  double y0 = 1.0;
  double x1 = 12.0;
  double y1 = 12.0;
  std::size_t grid = 6;
  std::size_t n_hotspots = 3;
  std::size_t points_per_hotspot = 5000;
  std::size_t points_per_cell = 1000;
  double hotspot_radius = 2.0;
  double outcome_prob = 0.5;
  std::size_t sample_per_stratum = 50;
  std::uint64_t seed = 1;

  /// Throws ConfigError listing every problem.
  void validate() const;
};

/// 9 x 10 rectangular strata over the design domain.
[[nodiscard]] geometry::ArealSupport default_strata(const SimulationDesign& design);

/// 6 x 6 targets whose interior breaks sit half a stratum cell off the
/// generation grid, so no target edge coincides with a stratum edge.
[[nodiscard]] geometry::ArealSupport default_targets(const SimulationDesign& design);

struct PseudoPopulation {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::uint8_t> w;
  std::vector<std::size_t> hotspot_cells;  ///< row-major grid indices

  [[nodiscard]] std::size_t size() const noexcept { return w.size(); }
  [[nodiscard]] double total() const;
};

[[nodiscard]] PseudoPopulation generate_population(const SimulationDesign& design, std::mt19937_64& rng);

/// Stratum index of every point (-1 when no stratum contains it). Points
/// on a shared edge go to the first stratum in support order.
[[nodiscard]] std::vector<std::ptrdiff_t> assign_points(const PseudoPopulation& pop,
                                                        const geometry::ArealSupport& strata);

struct StratifiedSample {
  std::vector<std::string> ids;
  Eigen::VectorXd counts;     ///< Z = N / n * sum of sampled w
  Eigen::VectorXd variances;  ///< (1 - n/N) N^2 p(1-p) / (n-1)
  std::vector<std::size_t> population;  ///< N per stratum
  Eigen::VectorXd p_hat;
  std::size_t dropped = 0;  ///< points outside every stratum

  /// Level-1 dataset (counts and variances).
  [[nodiscard]] model::SurveyDataset dataset() const;
};

/// Closed-form estimates for one stratum from its sampled outcome total.
[[nodiscard]] double stratum_count(std::size_t population, std::size_t sample_size, double sampled_total);
[[nodiscard]] double stratum_variance(std::size_t population, std::size_t sample_size, double p_hat);

/// Simple random sample without replacement of n_samp points per stratum.
/// Throws DataError naming the first stratum with fewer than n_samp points.
[[nodiscard]] StratifiedSample stratified_estimates(const PseudoPopulation& pop, const geometry::ArealSupport& strata,
                                                    std::size_t n_samp, std::mt19937_64& rng);

/// Sum of w over the points covered by each unit.
[[nodiscard]] Eigen::VectorXd true_means(const PseudoPopulation& pop, const geometry::ArealSupport& support);

}  // namespace countcos::simulate
