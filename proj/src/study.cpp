#include "countcos/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "countcos/errors.hpp"
#include "countcos/inference.hpp"
#include "countcos/pipeline.hpp"

namespace countcos::study {

std::string to_string(Comparator c) {
  switch (c) {
    case Comparator::VR: return "VR";
    case Comparator::MI: return "MI";
    case Comparator::SI: return "SI";
  }
  return "?";
}

Comparator parse_comparator(const std::string& name) {
  if (name == "VR") return Comparator::VR;
  if (name == "MI") return Comparator::MI;
  if (name == "SI") return Comparator::SI;
  throw ConfigError("unknown comparator '" + name + "' (expected VR, MI or SI)");
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t index) noexcept {
  return sampler::chain_seed(master ^ 0x5eed5eed5eed5eedULL, index);
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

ReplicateResult run_replicate(const StudyConfig& config, const geometry::ArealSupport& strata,
                              const geometry::ArealSupport& targets, const geometry::CosWeightMatrix& weights,
                              const basis::CovariateMatrix& covariates, const basis::MoranBasis& basis,
                              std::size_t index) {
  ReplicateResult out;
  out.index = index;
  out.seed = replicate_seed(config.design.seed, index);
  std::mt19937_64 rng(out.seed);
  const simulate::PseudoPopulation pop = simulate::generate_population(config.design, rng);
  const simulate::StratifiedSample sample =
      simulate::stratified_estimates(pop, strata, config.design.sample_per_stratum, rng);
  out.population = pop.size();
  out.dropped = sample.dropped;
  out.truth = simulate::true_means(pop, targets);
  const model::SurveyDataset data = sample.dataset();
  for (const auto& w : data.warnings()) out.warnings.push_back(w);

  inference::CosOptions cos_options;
  cos_options.level = config.level;

  auto fit_kind = [&](model::ModelKind kind, std::uint64_t salt) {
    sampler::SamplerConfig sc = config.sampler;
    sc.seed = sampler::chain_seed(out.seed, salt);
    const model::Model m(covariates, basis, data, config.hyper, kind);
    const double cpu0 = pipeline::thread_cpu_seconds();
    const sampler::PosteriorDraws draws = sampler::run_chain(m, sc);
    const inference::CosResult cos = inference::cos_posterior(draws.mu1, weights.source_checksum, weights, cos_options);
    out.cpu_seconds[model::to_string(kind)] = pipeline::thread_cpu_seconds() - cpu0;
    for (const auto& w : draws.warnings) out.warnings.push_back(model::to_string(kind) + ": " + w);
    return cos;
  };

  const inference::CosResult cs = fit_kind(model::ModelKind::CS, 0);
  out.cs_mean = cs.mean;
  out.cs_lower = cs.lower;
  out.cs_upper = cs.upper;
  for (Eigen::Index m = 0; m < out.truth.size(); ++m) {
    if (cs.lower(m) <= out.truth(m) && out.truth(m) <= cs.upper(m)) ++out.covered;
  }

  for (Comparator c : config.comparators) {
    Eigen::VectorXd est;
    switch (c) {
      case Comparator::VR: est = fit_kind(model::ModelKind::VR, 1).mean; break;
      case Comparator::MI: est = fit_kind(model::ModelKind::MI, 2).mean; break;
      case Comparator::SI: est = inference::simple_areal_interpolation(sample.counts, weights); break;
    }
    const std::string name = to_string(c);
    out.pad[name] = inference::pad({est.data(), static_cast<std::size_t>(est.size())},
                                   {cs.mean.data(), static_cast<std::size_t>(cs.mean.size())},
                                   {out.truth.data(), static_cast<std::size_t>(out.truth.size())});
    out.estimates[name] = std::move(est);
  }
  return out;
}

StudyResult run_study(const StudyConfig& config) {
  config.design.validate();
  config.sampler.validate();
  if (config.replicates == 0) throw ConfigError("replicates must be positive");
  const geometry::ArealSupport strata = config.strata ? *config.strata : simulate::default_strata(config.design);
  const geometry::ArealSupport targets = config.targets ? *config.targets : simulate::default_targets(config.design);
  const geometry::CosWeightMatrix weights = geometry::cos_weights(strata, targets);
  const pipeline::SpatialStructure structure = pipeline::build_structure(
      strata, basis::CovariateMatrix::intercept(strata.size()), config.basis, config.edge_rule);

  StudyResult result;
  result.target_ids = targets.ids();
  result.basis_rank = structure.basis.rank();
  result.replicates.resize(config.replicates);

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(config.replicates);
  auto worker = [&]() {
    for (std::size_t r = next++; r < config.replicates; r = next++) {
      try {
        result.replicates[r] =
            run_replicate(config, strata, targets, weights, structure.covariates, structure.basis, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(config.threads, 1, config.replicates);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::size_t covered = 0;
  std::size_t total = 0;
  for (const auto& rep : result.replicates) {
    covered += rep.covered;
    total += static_cast<std::size_t>(rep.truth.size());
  }
  result.coverage = total > 0 ? static_cast<double>(covered) / static_cast<double>(total) : 0.0;

  for (Comparator c : config.comparators) {
    ComparatorSummary s;
    s.name = to_string(c);
    std::vector<double> pads;
    for (const auto& rep : result.replicates) {
      const double v = rep.pad.at(s.name);
      pads.push_back(v);
      if (v > 0.0) ++s.positive;
    }
    s.trials = pads.size();
    s.sign_test_p = inference::sign_test_pvalue(s.positive, s.trials);
    s.median_pad = median(pads);
    result.summaries.push_back(s);
  }
  return result;
}

void write_pad_table(std::ostream& out, const StudyResult& result) {
  out << "replicate,comparator,pad\n";
  out.precision(17);
  for (const auto& rep : result.replicates) {
    for (const auto& [name, v] : rep.pad) out << rep.index << ',' << name << ',' << v << '\n';
  }
}

void write_cpu_table(std::ostream& out, const StudyResult& result) {
  out << "replicate,model,cpu_seconds\n";
  out.precision(6);
  for (const auto& rep : result.replicates) {
    for (const auto& [name, v] : rep.cpu_seconds) out << rep.index << ',' << name << ',' << v << '\n';
  }
}

}  // namespace countcos::study
