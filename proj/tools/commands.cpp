#include "commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "countcos/csv.hpp"
#include "countcos/diagnostics.hpp"
#include "countcos/errors.hpp"
#include "countcos/geojson.hpp"
#include "countcos/pipeline.hpp"
#include "countcos/store.hpp"

namespace countcos::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

json acceptance_json(const sampler::PosteriorDraws& draws) {
  json a = json::array();
  for (const auto& s : draws.acceptance) {
    if (s.proposed == 0) continue;
    a.push_back({{"block", s.name}, {"rate", s.rate()}, {"proposed", s.proposed}, {"scale", s.scale}});
  }
  return a;
}

json summaries_json(const std::vector<sampler::ScalarSummary>& summaries) {
  json a = json::array();
  for (const auto& s : summaries) {
    a.push_back({{"name", s.name}, {"mean", s.mean}, {"sd", s.sd}, {"ess", s.ess}, {"rhat", s.rhat}});
  }
  return a;
}

basis::CovariateMatrix read_covariates(const std::optional<CovariateInput>& input, const std::vector<std::string>& ids) {
  basis::CovariateMatrix cov = basis::CovariateMatrix::intercept(ids.size());
  if (!input || input->columns.empty()) return cov;
  const csv::Table table = csv::read(input->file);
  const auto n = static_cast<Eigen::Index>(ids.size());
  cov.X.conservativeResize(n, 1 + static_cast<Eigen::Index>(input->columns.size()));
  for (std::size_t c = 0; c < input->columns.size(); ++c) {
    const auto joined = csv::join_counts(table, ids, input->columns[c], "\x01");
    cov.X.col(1 + static_cast<Eigen::Index>(c)) = joined.counts;
    cov.labels.push_back(input->columns[c]);
  }
  return cov;
}

}  // namespace

FitOutcome cmd_fit(RunConfig config, const CommonOptions& options, std::ostream& log) {
  if (options.seed) config.sampler.seed = *options.seed;
  if (options.threads) config.sampler.max_threads = *options.threads;
  if (options.output_dir) config.output_dir = *options.output_dir;
  config.sampler.validate();
  const fs::path out_dir = prepare_dir(config.output_dir);

  const geometry::ArealSupport level1 = geometry::read_geojson(config.levels.front().geometry, 1);
  std::vector<model::SupportData> levels;
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const int level = static_cast<int>(l) + 1;
    const geometry::ArealSupport support =
        l == 0 ? level1 : geometry::read_geojson(config.levels[l].geometry, level);
    const csv::CountTable table =
        csv::join_counts(csv::read(config.levels[l].data), support.ids(), config.count_column, config.variance_column);
    model::SupportData sd;
    sd.level = level;
    sd.ids = support.ids();
    sd.counts = table.counts;
    sd.variances = table.variances;
    if (l > 0) {
      geometry::CosWeightMatrix w = geometry::cos_weights(level1, support);
      for (std::size_t m : w.uncovered) {
        log << "warning: level " << level << " unit '" << w.target_ids[m] << "' is only "
            << 100.0 * (1.0 - w.gap_fraction[m]) << "% covered by level 1\n";
      }
      sd.weights = std::move(w.H);
    }
    levels.push_back(std::move(sd));
  }
  if (model::uses_variance_model(config.kind)) {
    for (const auto& sd : levels) {
      if (sd.variances.size() == 0) {
        throw DataError("model " + model::to_string(config.kind) + " needs a '" + config.variance_column +
                        "' column for level " + std::to_string(sd.level));
      }
    }
  }
  const model::SurveyDataset data(level1.size(), levels);
  for (const auto& w : data.warnings()) log << "warning: " << w << '\n';

  basis::CovariateMatrix covariates = read_covariates(config.covariates, level1.ids());
  const pipeline::SpatialStructure structure =
      pipeline::build_structure(level1, std::move(covariates), config.basis, config.edge_rule);
  for (std::size_t i : structure.isolated) log << "warning: unit '" << level1.unit(i).id() << "' has no neighbours\n";
  log << "basis: " << structure.basis.n_positive << " positive eigenvalues, r = " << structure.basis.rank() << '\n';

  const auto t0 = std::chrono::steady_clock::now();
  pipeline::FitResult fit = pipeline::fit(structure, data, config.hyper, config.kind, config.sampler);
  const double seconds = since(t0);
  for (const auto& w : fit.draws.warnings) log << "warning: " << w << '\n';

  store::DrawStore st;
  st.source = level1;
  st.kind = config.kind;
  st.hyper = config.hyper;
  st.covariates = structure.covariates;
  st.basis = structure.basis;
  st.levels = std::move(levels);
  st.draws = std::move(fit.draws);
  const fs::path store_path = config.store.is_absolute() ? config.store : out_dir / config.store;
  store::write_store(store_path, st, static_cast<std::uint64_t>(std::time(nullptr)));

  const bool gap = model::prior_kind(config.kind) == covariance::PriorKind::GAP;
  const auto summaries = sampler::summarize(st.draws, gap);
  json report = {{"model", model::to_string(config.kind)},
                 {"n1", level1.size()},
                 {"r", structure.basis.rank()},
                 {"n_positive", structure.basis.n_positive},
                 {"draws", st.draws.size()},
                 {"seed", config.sampler.seed},
                 {"runtime_seconds", seconds},
                 {"cpu_seconds", fit.cpu_seconds},
                 {"acceptance", acceptance_json(st.draws)},
                 {"scalars", summaries_json(summaries)},
                 {"warnings", st.draws.warnings}};
  const fs::path diag = out_dir / "diagnostics.json";
  write_text(diag, report.dump(2) + "\n");
  {
    std::ofstream traces(out_dir / "traces.csv", std::ios::binary | std::ios::trunc);
    store::write_trace_csv(traces, st.draws, gap);
  }
  log << "fit: " << st.draws.size() << " draws in " << seconds << " s -> " << store_path.string() << '\n';
  return {store_path, diag, st.draws.size(), seconds};
}

CosOutcome cmd_cos(const fs::path& store_path, const fs::path& targets_path, const CosOptions& cos_options,
                   const CommonOptions& options, std::ostream& log) {
  CosOutcome out;
  const fs::path out_dir = prepare_dir(options.output_dir.value_or("."));
  auto t0 = std::chrono::steady_clock::now();
  const store::CosView view = store::read_cos_view(store_path);
  const geometry::ArealSupport targets = geometry::read_geojson(targets_path, geometry::ArealSupport::kTargetLevel);
  out.read_seconds = since(t0);

  t0 = std::chrono::steady_clock::now();
  geometry::ClipOptions clip;
  clip.raster_cell_size = cos_options.raster_cell_size;
  const geometry::CosWeightMatrix weights = geometry::cos_weights(view.source, targets, clip);
  out.weights_seconds = since(t0);
  for (std::size_t m : weights.uncovered) {
    log << "warning: target '" << weights.target_ids[m] << "' is only " << 100.0 * (1.0 - weights.gap_fraction[m])
        << "% covered by the source support\n";
  }

  t0 = std::chrono::steady_clock::now();
  inference::CosOptions opts;
  opts.level = cos_options.level;
  out.result = inference::cos_posterior(view.mu1, view.header.geometry_checksum, weights, opts);
  out.cos_seconds = since(t0);

  t0 = std::chrono::steady_clock::now();
  const auto& r = out.result;
  auto as_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  geometry::FeatureProperties props{
      {"mean", as_vec(r.mean)}, {"variance", as_vec(r.variance)}, {"lower", as_vec(r.lower)}, {"upper", as_vec(r.upper)}};
  out.geojson = out_dir / (cos_options.stem + ".geojson");
  out.csv = out_dir / (cos_options.stem + ".csv");
  geometry::write_geojson(out.geojson, targets, props);
  {
    std::ofstream csv_out(out.csv, std::ios::binary | std::ios::trunc);
    if (!csv_out) throw DataError("cannot write " + out.csv.string());
    csv_out.precision(17);
    csv_out << "id,mean,variance,lower,upper\n";
    for (std::size_t m = 0; m < r.size(); ++m) {
      const auto mm = static_cast<Eigen::Index>(m);
      csv_out << csv::escape(r.target_ids[m]) << ',' << r.mean(mm) << ',' << r.variance(mm) << ',' << r.lower(mm)
              << ',' << r.upper(mm) << '\n';
    }
  }
  out.write_seconds = since(t0);
  log << "timing: read " << out.read_seconds << " s, weights " << out.weights_seconds << " s, cos "
      << out.cos_seconds << " s, write " << out.write_seconds << " s (" << view.mu1.rows() << " draws, "
      << r.size() << " targets)\n";
  return out;
}

study::StudyResult cmd_simulate(study::StudyConfig config, const CommonOptions& options, std::ostream& log) {
  if (options.seed) config.design.seed = *options.seed;
  if (options.threads) config.threads = *options.threads;
  const fs::path out_dir = prepare_dir(options.output_dir.value_or("."));
  const auto t0 = std::chrono::steady_clock::now();
  const study::StudyResult result = study::run_study(config);
  const double seconds = since(t0);
  {
    std::ofstream pad(out_dir / "pad.csv", std::ios::binary | std::ios::trunc);
    study::write_pad_table(pad, result);
    std::ofstream cpu(out_dir / "cpu.csv", std::ios::binary | std::ios::trunc);
    study::write_cpu_table(cpu, result);
  }
  json summary = {{"replicates", result.replicates.size()},
                  {"basis_rank", result.basis_rank},
                  {"coverage", result.coverage},
                  {"level", config.level},
                  {"comparators", json::array()}};
  for (const auto& s : result.summaries) {
    summary["comparators"].push_back({{"name", s.name},
                                      {"positive", s.positive},
                                      {"trials", s.trials},
                                      {"sign_test_p", s.sign_test_p},
                                      {"median_pad", s.median_pad}});
  }
  json dropped = json::array();
  for (const auto& rep : result.replicates) dropped.push_back(rep.dropped);
  summary["dropped_points"] = dropped;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  for (const auto& rep : result.replicates) {
    for (const auto& w : rep.warnings) log << "warning: replicate " << rep.index << ": " << w << '\n';
  }
  for (const auto& s : result.summaries) {
    log << "PAD(" << s.name << ") > 0 in " << s.positive << "/" << s.trials << " replicates, sign test p = "
        << s.sign_test_p << ", median " << s.median_pad << '\n';
  }
  log << "coverage of " << config.level << " intervals: " << result.coverage << '\n';
  log << "study: " << result.replicates.size() << " replicates in " << seconds << " s\n";
  return result;
}

DiagnoseOutcome cmd_diagnose(const fs::path& store_path, const CommonOptions& options, std::ostream& log) {
  const fs::path out_dir = prepare_dir(options.output_dir.value_or("."));
  const store::DrawStore st = store::read_store(store_path);
  const model::SurveyDataset data = st.dataset();
  const model::Model m(st.covariates, st.basis, data, st.hyper, st.kind);
  const bool gap = model::prior_kind(st.kind) == covariance::PriorKind::GAP;

  DiagnoseOutcome out;
  out.pvalue = inference::posterior_predictive_pvalue(st.draws, m, options.seed.value_or(st.draws.seed));
  out.summaries = sampler::summarize(st.draws, gap);
  json report = {{"model", model::to_string(st.kind)},
                 {"draws", st.draws.size()},
                 {"posterior_predictive_pvalue", out.pvalue},
                 {"acceptance", acceptance_json(st.draws)},
                 {"scalars", summaries_json(out.summaries)},
                 {"warnings", st.draws.warnings}};
  out.report = out_dir / "diagnose.json";
  write_text(out.report, report.dump(2) + "\n");
  {
    std::ofstream traces(out_dir / "traces.csv", std::ios::binary | std::ios::trunc);
    store::write_trace_csv(traces, st.draws, gap);
  }
  log << "posterior predictive p-value: " << out.pvalue << '\n';
  for (const auto& s : out.summaries) {
    log << "  " << s.name << ": mean " << s.mean << ", ESS " << s.ess << ", split-Rhat " << s.rhat << '\n';
  }
  return out;
}

}  // namespace countcos::cli
