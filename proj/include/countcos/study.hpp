#pragma once

/// @file study.hpp
/// @brief Replicate simulation study comparing CS with VR, MI and SI.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "countcos/basis.hpp"
#include "countcos/geometry.hpp"
#include "countcos/model.hpp"
#include "countcos/sampler.hpp"
#include "countcos/simulate.hpp"

namespace countcos::study {

enum class Comparator { VR, MI, SI };

[[nodiscard]] std::string to_string(Comparator c);
[[nodiscard]] Comparator parse_comparator(const std::string& name);

struct StudyConfig {
  simulate::SimulationDesign design;
  std::optional<geometry::ArealSupport> strata;   ///< default_strata when empty
  std::optional<geometry::ArealSupport> targets;  ///< default_targets when empty
  std::vector<Comparator> comparators{Comparator::VR, Comparator::MI, Comparator::SI};
  std::size_t replicates = 50;
  sampler::SamplerConfig sampler;
  basis::BasisOptions basis;
  model::Hyperparameters hyper;
  geometry::EdgeRule edge_rule = geometry::EdgeRule::Rook;
  double level = 0.90;
  std::size_t threads = 1;
};

struct ReplicateResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t population = 0;
  std::size_t dropped = 0;
  Eigen::VectorXd truth;
  Eigen::VectorXd cs_mean;
  Eigen::VectorXd cs_lower;
  Eigen::VectorXd cs_upper;
  std::size_t covered = 0;
  std::map<std::string, Eigen::VectorXd> estimates;  ///< per comparator
  std::map<std::string, double> pad;                 ///< per comparator
  std::map<std::string, double> cpu_seconds;         ///< per fitted model (CS, VR, MI)
  std::vector<std::string> warnings;
};

struct ComparatorSummary {
  std::string name;
  std::size_t positive = 0;
  std::size_t trials = 0;
  double sign_test_p = 1.0;
  double median_pad = 0.0;
};

struct StudyResult {
  std::vector<std::string> target_ids;
  std::size_t basis_rank = 0;
  std::vector<ReplicateResult> replicates;
  std::vector<ComparatorSummary> summaries;
  double coverage = 0.0;  ///< pooled fraction of target units covered by the CS intervals
};

/// Seed of replicate `index`.
[[nodiscard]] std::uint64_t replicate_seed(std::uint64_t master, std::size_t index) noexcept;

[[nodiscard]] ReplicateResult run_replicate(const StudyConfig& config, const geometry::ArealSupport& strata,
                                            const geometry::ArealSupport& targets,
                                            const geometry::CosWeightMatrix& weights,
                                            const basis::CovariateMatrix& covariates, const basis::MoranBasis& basis,
                                            std::size_t index);

[[nodiscard]] StudyResult run_study(const StudyConfig& config);

/// replicate,comparator,pad
void write_pad_table(std::ostream& out, const StudyResult& result);
/// replicate,model,cpu_seconds
void write_cpu_table(std::ostream& out, const StudyResult& result);

}  // namespace countcos::study
