#include "countcos/pipeline.hpp"

#include <chrono>
#include <ctime>

namespace countcos::pipeline {

SpatialStructure build_structure(const geometry::ArealSupport& level1, basis::CovariateMatrix covariates,
                                 const basis::BasisOptions& options, geometry::EdgeRule rule) {
  std::vector<std::size_t> isolated;
  Eigen::MatrixXd adjacency = geometry::adjacency_from_boundaries(level1, rule, &isolated);
  SpatialStructure s = build_structure(std::move(adjacency), std::move(covariates), options);
  s.isolated = std::move(isolated);
  return s;
}

SpatialStructure build_structure(Eigen::MatrixXd adjacency, basis::CovariateMatrix covariates,
                                 const basis::BasisOptions& options) {
  covariates.validate();
  if (static_cast<std::size_t>(adjacency.rows()) != covariates.rows()) {
    throw DataError("adjacency and covariates disagree on the number of units");
  }
  SpatialStructure s;
  const Eigen::MatrixXd moran = basis::moran_operator(adjacency, covariates);
  s.basis = basis::build_basis(moran, adjacency, options);
  s.adjacency = std::move(adjacency);
  s.covariates = std::move(covariates);
  return s;
}

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

FitResult fit(const SpatialStructure& structure, const model::SurveyDataset& data, const model::Hyperparameters& hyper,
              model::ModelKind kind, const sampler::SamplerConfig& config) {
  const model::Model m(structure.covariates, structure.basis, data, hyper, kind);
  const double cpu0 = thread_cpu_seconds();
  const auto wall0 = std::chrono::steady_clock::now();
  FitResult out;
  out.draws = sampler::run_chain(m, config);
  out.cpu_seconds = thread_cpu_seconds() - cpu0;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return out;
}

}  // namespace countcos::pipeline
