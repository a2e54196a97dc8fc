#pragma once

/// @file pipeline.hpp
/// @brief Glue from geometry and data to posterior draws.

#include <vector>

#include "countcos/basis.hpp"
#include "countcos/geometry.hpp"
#include "countcos/model.hpp"
#include "countcos/sampler.hpp"

namespace countcos::pipeline {

/// Adjacency, covariates and basis of a level-1 support.
struct SpatialStructure {
  Eigen::MatrixXd adjacency;
  basis::CovariateMatrix covariates;
  basis::MoranBasis basis;
  std::vector<std::size_t> isolated;
};

[[nodiscard]] SpatialStructure build_structure(const geometry::ArealSupport& level1,
                                               basis::CovariateMatrix covariates,
                                               const basis::BasisOptions& options = {},
                                               geometry::EdgeRule rule = geometry::EdgeRule::Rook);

[[nodiscard]] SpatialStructure build_structure(Eigen::MatrixXd adjacency, basis::CovariateMatrix covariates,
                                               const basis::BasisOptions& options = {});

struct FitResult {
  sampler::PosteriorDraws draws;
  double cpu_seconds = 0.0;
  double wall_seconds = 0.0;
};

[[nodiscard]] FitResult fit(const SpatialStructure& structure, const model::SurveyDataset& data,
                            const model::Hyperparameters& hyper, model::ModelKind kind,
                            const sampler::SamplerConfig& config);

/// CPU time consumed by the calling thread.
[[nodiscard]] double thread_cpu_seconds();

}  // namespace countcos::pipeline
