#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "config.hpp"
#include "countcos/diagnostics.hpp"
#include "countcos/inference.hpp"
#include "countcos/sampler.hpp"
#include "countcos/study.hpp"

namespace countcos::cli {

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::filesystem::path> output_dir;
};

struct FitOutcome {
  std::filesystem::path store;
  std::filesystem::path diagnostics;
  std::size_t draws = 0;
  double seconds = 0.0;
};

/// Reads geometry and data, fits the model, writes the draw store,
/// diagnostics.json and traces.csv. Progress and warnings go to `log`.
FitOutcome cmd_fit(RunConfig config, const CommonOptions& options, std::ostream& log);

struct CosOptions {
  double level = 0.90;
  std::optional<double> raster_cell_size;
  std::string stem = "cos";
};

struct CosOutcome {
  inference::CosResult result;
  std::filesystem::path geojson;
  std::filesystem::path csv;
  double read_seconds = 0.0;
  double weights_seconds = 0.0;
  double cos_seconds = 0.0;
  double write_seconds = 0.0;
};

CosOutcome cmd_cos(const std::filesystem::path& store, const std::filesystem::path& targets,
                   const CosOptions& cos_options, const CommonOptions& options, std::ostream& log);

study::StudyResult cmd_simulate(study::StudyConfig config, const CommonOptions& options, std::ostream& log);

struct DiagnoseOutcome {
  double pvalue = 0.0;
  std::vector<sampler::ScalarSummary> summaries;
  std::filesystem::path report;
};

DiagnoseOutcome cmd_diagnose(const std::filesystem::path& store, const CommonOptions& options, std::ostream& log);

}  // namespace countcos::cli
