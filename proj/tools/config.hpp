#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "countcos/basis.hpp"
#include "countcos/geometry.hpp"
#include "countcos/model.hpp"
#include "countcos/sampler.hpp"
#include "countcos/study.hpp"

namespace countcos::cli {

struct LevelInput {
  std::filesystem::path geometry;
  std::filesystem::path data;
};

struct CovariateInput {
  std::filesystem::path file;
  std::vector<std::string> columns;
};

struct RunConfig {
  std::vector<LevelInput> levels;
  std::optional<CovariateInput> covariates;
  std::string count_column = "count";
  std::string variance_column = "variance";
  model::ModelKind kind = model::ModelKind::CS;
  basis::BasisOptions basis;
  geometry::EdgeRule edge_rule = geometry::EdgeRule::Rook;
  sampler::SamplerConfig sampler;
  model::Hyperparameters hyper;
  std::filesystem::path store = "draws.ccos";
  std::filesystem::path output_dir = ".";
};

/// Parses a fit configuration. Relative paths resolve against `base`.
/// Throws ConfigError listing every problem found.
[[nodiscard]] RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

[[nodiscard]] study::StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base);
[[nodiscard]] study::StudyConfig load_study_config(const std::filesystem::path& path);

}  // namespace countcos::cli
