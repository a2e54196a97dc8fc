#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "countcos/errors.hpp"
#include "countcos/geojson.hpp"

namespace countcos::cli {

using json = nlohmann::json;

namespace {

// Reads fields of one JSON object, recording type errors and unknown keys.
class Fields {
 public:
  Fields(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) errors_.push_back(path_ + ": expected an object");
  }

  ~Fields() {
    if (!obj_.is_object()) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) errors_.push_back(path_ + ": unknown key '" + it.key() + "'");
    }
  }

  Fields(const Fields&) = delete;
  Fields& operator=(const Fields&) = delete;

  [[nodiscard]] const json* find(const std::string& key) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

  [[nodiscard]] std::string at(const std::string& key) const { return path_ + "." + key; }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        errors_.push_back(at(key) + ": expected a number");
      }
    }
  }

  template <class Int>
  void count(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (v->is_number_unsigned()) {
        out = static_cast<Int>(v->get<std::uint64_t>());
      } else {
        errors_.push_back(at(key) + ": expected a nonnegative integer");
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        errors_.push_back(at(key) + ": expected true or false");
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        errors_.push_back(at(key) + ": expected a string");
      }
    }
  }

  void path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base, bool must_exist) {
    std::string s;
    if (!find(key)) return;
    string(key, s);
    if (s.empty()) return;
    out = std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base / s;
    if (must_exist && !std::filesystem::exists(out)) errors_.push_back(at(key) + ": file not found: " + out.string());
  }

  std::vector<std::string>& errors() { return errors_; }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void throw_if_errors(const std::vector<std::string>& errors, const std::string& what) {
  if (errors.empty()) return;
  std::ostringstream msg;
  msg << "invalid " << what << " (" << errors.size() << (errors.size() == 1 ? " problem" : " problems") << "):";
  for (const auto& e : errors) msg << "\n  - " << e;
  throw ConfigError(msg.str());
}

void read_sampler(const json& j, sampler::SamplerConfig& s, std::vector<std::string>& errors) {
  Fields f(j, "sampler", errors);
  f.count("iterations", s.iterations);
  f.count("burn_in", s.burn_in);
  f.count("thin", s.thin);
  f.count("chains", s.chains);
  f.count("seed", s.seed);
  f.number("eta_scale", s.eta_scale);
  f.number("beta_scale", s.beta_scale);
  f.number("xi_scale", s.xi_scale);
  f.number("ab_scale", s.ab_scale);
  f.count("eta_block_size", s.eta_block_size);
  f.boolean("adapt", s.adapt);
  f.number("target_accept", s.target_accept);
  f.number("target_accept_scalar", s.target_accept_scalar);
  f.boolean("fail_on_rhat", s.fail_on_rhat);
  f.number("rhat_threshold", s.rhat_threshold);
}

void read_hyper(const json& j, model::Hyperparameters& h, std::vector<std::string>& errors) {
  Fields f(j, "hyperparameters", errors);
  if (const json* v = f.find("mu_beta")) {
    if (v->is_array() && std::all_of(v->begin(), v->end(), [](const json& x) { return x.is_number(); })) {
      const auto vals = v->get<std::vector<double>>();
      h.mu_beta = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    } else {
      errors.push_back(f.at("mu_beta") + ": expected an array of numbers");
    }
  }
  if (const json* v = f.find("mu_Phi")) {
    if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number()) {
      h.mu_Phi = Eigen::Vector2d((*v)[0].get<double>(), (*v)[1].get<double>());
    } else {
      errors.push_back(f.at("mu_Phi") + ": expected two numbers");
    }
  }
  f.number("sigma2_beta", h.sigma2_beta);
  f.number("alpha_phi", h.alpha_phi);
  f.number("omega_phi", h.omega_phi);
  f.number("sigma2_Phi", h.sigma2_Phi);
  f.number("alpha_eps", h.alpha_eps);
  f.number("omega_eps", h.omega_eps);
  f.number("alpha_gamma", h.alpha_gamma);
  f.number("omega_gamma", h.omega_gamma);
}

void read_basis(const json& j, basis::BasisOptions& b, std::vector<std::string>& errors) {
  Fields f(j, "basis", errors);
  f.number("fraction", b.fraction);
  if (f.find("rank")) {
    std::size_t r = 0;
    f.count("rank", r);
    if (r == 0) {
      errors.push_back(f.at("rank") + ": must be positive");
    } else {
      b.rank = r;
    }
  }
  if (!(b.fraction > 0.0 && b.fraction <= 1.0)) errors.push_back(f.at("fraction") + ": must be in (0,1]");
}

void read_edge_rule(Fields& f, geometry::EdgeRule& rule) {
  std::string s;
  f.string("adjacency", s);
  if (s.empty() || s == "rook") {
    rule = geometry::EdgeRule::Rook;
  } else if (s == "queen") {
    rule = geometry::EdgeRule::Queen;
  } else {
    f.errors().push_back(f.at("adjacency") + ": expected \"rook\" or \"queen\"");
  }
}

void check_sampler(const sampler::SamplerConfig& s, std::vector<std::string>& errors) {
  try {
    s.validate();
  } catch (const ConfigError& e) {
    std::istringstream lines(e.what());
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) errors.push_back("sampler: " + line.substr(line.find("- ") + 2));
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base) {
  const json root = parse_json(text);
  RunConfig cfg;
  std::vector<std::string> errors;
  {
    Fields f(root, "config", errors);
    if (const json* levels = f.find("levels")) {
      if (!levels->is_array() || levels->empty()) {
        errors.push_back("config.levels: expected a non-empty array");
      } else {
        for (std::size_t l = 0; l < levels->size(); ++l) {
          Fields lf((*levels)[l], "levels[" + std::to_string(l) + "]", errors);
          LevelInput in;
          if (!lf.find("geometry")) errors.push_back(lf.at("geometry") + ": required");
          if (!lf.find("data")) errors.push_back(lf.at("data") + ": required");
          lf.path("geometry", in.geometry, base, true);
          lf.path("data", in.data, base, true);
          cfg.levels.push_back(in);
        }
      }
    } else {
      errors.push_back("config.levels: required");
    }
    if (const json* cov = f.find("covariates")) {
      Fields cf(*cov, "covariates", errors);
      CovariateInput in;
      cf.path("file", in.file, base, true);
      if (const json* cols = cf.find("columns")) {
        if (cols->is_array() && std::all_of(cols->begin(), cols->end(), [](const json& x) { return x.is_string(); })) {
          in.columns = cols->get<std::vector<std::string>>();
        } else {
          errors.push_back("covariates.columns: expected an array of strings");
        }
      }
      if (in.file.empty()) errors.push_back("covariates.file: required");
      cfg.covariates = in;
    }
    f.string("count_column", cfg.count_column);
    f.string("variance_column", cfg.variance_column);
    std::string kind = "CS";
    f.string("model", kind);
    try {
      cfg.kind = model::parse_model_kind(kind);
    } catch (const ConfigError& e) {
      errors.push_back(std::string("config.model: ") + e.what());
    }
    if (const json* b = f.find("basis")) read_basis(*b, cfg.basis, errors);
    read_edge_rule(f, cfg.edge_rule);
    if (const json* s = f.find("sampler")) read_sampler(*s, cfg.sampler, errors);
    if (const json* h = f.find("hyperparameters")) read_hyper(*h, cfg.hyper, errors);
    if (const json* o = f.find("output")) {
      Fields of(*o, "output", errors);
      of.path("dir", cfg.output_dir, base, false);
      std::string store;
      of.string("store", store);
      if (!store.empty()) cfg.store = store;
    }
  }
  check_sampler(cfg.sampler, errors);
  throw_if_errors(errors, "fit configuration");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(slurp(path), path.parent_path().empty() ? "." : path.parent_path());
}

study::StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base) {
  const json root = parse_json(text);
  study::StudyConfig cfg;
  std::vector<std::string> errors;
  std::filesystem::path strata_path, targets_path;
  {
    Fields f(root, "config", errors);
    if (const json* d = f.find("design")) {
      Fields df(*d, "design", errors);
      auto& des = cfg.design;
      if (const json* dom = df.find("domain")) {
        if (dom->is_array() && dom->size() == 4 &&
            std::all_of(dom->begin(), dom->end(), [](const json& x) { return x.is_number(); })) {
          des.x0 = (*dom)[0].get<double>();
          des.y0 = (*dom)[1].get<double>();
          des.x1 = (*dom)[2].get<double>();
          des.y1 = (*dom)[3].get<double>();
        } else {
          errors.push_back("design.domain: expected [x0, y0, x1, y1]");
        }
      }
      df.count("grid", des.grid);
      df.count("n_hotspots", des.n_hotspots);
      df.count("points_per_hotspot", des.points_per_hotspot);
      df.count("points_per_cell", des.points_per_cell);
      df.number("hotspot_radius", des.hotspot_radius);
      df.number("outcome_prob", des.outcome_prob);
      df.count("sample_per_stratum", des.sample_per_stratum);
      df.count("seed", des.seed);
    }
    f.path("strata", strata_path, base, true);
    f.path("targets", targets_path, base, true);
    if (const json* c = f.find("comparators")) {
      cfg.comparators.clear();
      if (!c->is_array()) {
        errors.push_back("config.comparators: expected an array");
      } else {
        for (const auto& x : *c) {
          try {
            cfg.comparators.push_back(study::parse_comparator(x.is_string() ? x.get<std::string>() : "?"));
          } catch (const ConfigError& e) {
            errors.push_back(std::string("config.comparators: ") + e.what());
          }
        }
      }
    }
    f.count("replicates", cfg.replicates);
    if (cfg.replicates == 0) errors.push_back("config.replicates: must be positive");
    f.number("level", cfg.level);
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) errors.push_back("config.level: must be in (0,1)");
    f.count("threads", cfg.threads);
    read_edge_rule(f, cfg.edge_rule);
    if (const json* s = f.find("sampler")) read_sampler(*s, cfg.sampler, errors);
    if (const json* b = f.find("basis")) read_basis(*b, cfg.basis, errors);
    if (const json* h = f.find("hyperparameters")) read_hyper(*h, cfg.hyper, errors);
  }
  try {
    cfg.design.validate();
  } catch (const ConfigError& e) {
    errors.emplace_back(e.what());
  }
  check_sampler(cfg.sampler, errors);
  throw_if_errors(errors, "study configuration");
  if (!strata_path.empty()) cfg.strata = geometry::read_geojson(strata_path, 1);
  if (!targets_path.empty()) cfg.targets = geometry::read_geojson(targets_path, geometry::ArealSupport::kTargetLevel);
  return cfg;
}

study::StudyConfig load_study_config(const std::filesystem::path& path) {
  return parse_study_config(slurp(path), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace countcos::cli
