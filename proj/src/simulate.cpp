#include "countcos/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/geometry/index/rtree.hpp>

#include "countcos/errors.hpp"

namespace countcos::simulate {

namespace bgi = boost::geometry::index;
using geometry::ArealSupport;

void SimulationDesign::validate() const {
  std::vector<std::string> problems;
  if (!(x1 > x0 && y1 > y0)) problems.emplace_back("domain bounds must be increasing");
  if (grid == 0) problems.emplace_back("grid must be positive");
  if (n_hotspots > grid * grid) problems.emplace_back("more hot spots than grid cells");
  if (!(hotspot_radius > 0.0)) problems.emplace_back("hotspot_radius must be positive");
  if (!(outcome_prob >= 0.0 && outcome_prob <= 1.0)) problems.emplace_back("outcome_prob must be in [0,1]");
  if (sample_per_stratum < 2) problems.emplace_back("sample_per_stratum must be at least 2");
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid simulation design:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ConfigError(msg.str());
  }
}

ArealSupport default_strata(const SimulationDesign& design) {
  return geometry::rect_tiling(design.x0, design.y0, design.x1, design.y1, 9, 10, "s", 1);
}

ArealSupport default_targets(const SimulationDesign& design) {
  const double wx = (design.x1 - design.x0) / 9.0;
  const double wy = (design.y1 - design.y0) / 10.0;
  const auto g = static_cast<double>(design.grid);
  std::vector<double> xb{design.x0}, yb{design.y0};
  for (std::size_t k = 1; k < design.grid; ++k) {
    xb.push_back(design.x0 + static_cast<double>(k) * (design.x1 - design.x0) / g + 0.5 * wx);
    yb.push_back(design.y0 + static_cast<double>(k) * (design.y1 - design.y0) / g + 0.5 * wy);
  }
  xb.push_back(design.x1);
  yb.push_back(design.y1);
  return geometry::rect_tiling(xb, yb, "t", ArealSupport::kTargetLevel);
}

double PseudoPopulation::total() const {
  return static_cast<double>(std::accumulate(w.begin(), w.end(), std::size_t{0}));
}

PseudoPopulation generate_population(const SimulationDesign& design, std::mt19937_64& rng) {
  design.validate();
  const std::size_t cells = design.grid * design.grid;
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), 0);
  // partial Fisher-Yates: the first n_hotspots entries are the hot spots
  for (std::size_t k = 0; k < design.n_hotspots; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, cells - 1);
    std::swap(order[k], order[pick(rng)]);
  }
  PseudoPopulation pop;
  pop.hotspot_cells.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(design.n_hotspots));
  std::sort(pop.hotspot_cells.begin(), pop.hotspot_cells.end());

  const double cw = (design.x1 - design.x0) / static_cast<double>(design.grid);
  const double ch = (design.y1 - design.y0) / static_cast<double>(design.grid);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::bernoulli_distribution outcome(design.outcome_prob);
  const std::size_t expected =
      design.n_hotspots * design.points_per_hotspot + (cells - design.n_hotspots) * design.points_per_cell;
  pop.x.reserve(expected);
  pop.y.reserve(expected);
  pop.w.reserve(expected);

  for (std::size_t c = 0; c < cells; ++c) {
    const double cx0 = design.x0 + static_cast<double>(c % design.grid) * cw;
    const double cy0 = design.y0 + static_cast<double>(c / design.grid) * ch;
    const bool hot = std::binary_search(pop.hotspot_cells.begin(), pop.hotspot_cells.end(), c);
    if (hot) {
      const double mx = cx0 + 0.5 * cw;
      const double my = cy0 + 0.5 * ch;
      for (std::size_t k = 0; k < design.points_per_hotspot; ++k) {
        const double rad = design.hotspot_radius * std::sqrt(unif(rng));
        const double theta = 2.0 * std::numbers::pi * unif(rng);
        pop.x.push_back(mx + rad * std::cos(theta));
        pop.y.push_back(my + rad * std::sin(theta));
        pop.w.push_back(outcome(rng) ? 1 : 0);
      }
    } else {
      for (std::size_t k = 0; k < design.points_per_cell; ++k) {
        pop.x.push_back(cx0 + cw * unif(rng));
        pop.y.push_back(cy0 + ch * unif(rng));
        pop.w.push_back(outcome(rng) ? 1 : 0);
      }
    }
  }
  return pop;
}

namespace {

using BoxEntry = std::pair<geometry::Box, std::size_t>;

bgi::rtree<BoxEntry, bgi::quadratic<16>> envelope_index(const ArealSupport& support) {
  std::vector<BoxEntry> entries;
  for (std::size_t i = 0; i < support.size(); ++i) entries.emplace_back(support.unit(i).envelope(), i);
  return {entries.begin(), entries.end()};
}

// Indices of units covering (x, y), ascending.
void covering_units(const bgi::rtree<BoxEntry, bgi::quadratic<16>>& tree, const ArealSupport& support, double x,
                    double y, std::vector<std::size_t>& out) {
  out.clear();
  std::vector<BoxEntry> hits;
  tree.query(bgi::covers(geometry::Point(x, y)), std::back_inserter(hits));
  for (const auto& [box, i] : hits) {
    if (support.unit(i).covers(x, y)) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
}

}  // namespace

std::vector<std::ptrdiff_t> assign_points(const PseudoPopulation& pop, const ArealSupport& strata) {
  const auto tree = envelope_index(strata);
  std::vector<std::ptrdiff_t> out(pop.size(), -1);
  std::vector<std::size_t> hits;
  for (std::size_t j = 0; j < pop.size(); ++j) {
    covering_units(tree, strata, pop.x[j], pop.y[j], hits);
    if (!hits.empty()) out[j] = static_cast<std::ptrdiff_t>(hits.front());
  }
  return out;
}

double stratum_count(std::size_t population, std::size_t sample_size, double sampled_total) {
  return static_cast<double>(population) / static_cast<double>(sample_size) * sampled_total;
}

double stratum_variance(std::size_t population, std::size_t sample_size, double p_hat) {
  const double N = static_cast<double>(population);
  const double n = static_cast<double>(sample_size);
  return (1.0 - n / N) * N * N * p_hat * (1.0 - p_hat) / (n - 1.0);
}

model::SurveyDataset StratifiedSample::dataset() const {
  model::SupportData level;
  level.level = 1;
  level.ids = ids;
  level.counts = counts;
  level.variances = variances;
  return model::SurveyDataset(ids.size(), {std::move(level)});
}

StratifiedSample stratified_estimates(const PseudoPopulation& pop, const ArealSupport& strata, std::size_t n_samp,
                                      std::mt19937_64& rng) {
  if (n_samp < 2) throw ConfigError("sample size per stratum must be at least 2");
  const auto assignment = assign_points(pop, strata);
  std::vector<std::vector<std::size_t>> members(strata.size());
  StratifiedSample out;
  for (std::size_t j = 0; j < assignment.size(); ++j) {
    if (assignment[j] < 0) {
      ++out.dropped;
    } else {
      members[static_cast<std::size_t>(assignment[j])].push_back(j);
    }
  }
  const auto n = static_cast<Eigen::Index>(strata.size());
  out.ids = strata.ids();
  out.counts.resize(n);
  out.variances.resize(n);
  out.p_hat.resize(n);
  out.population.resize(strata.size());
  for (std::size_t i = 0; i < strata.size(); ++i) {
    auto& idx = members[i];
    if (idx.size() < n_samp) {
      throw DataError("stratum '" + strata.unit(i).id() + "' holds " + std::to_string(idx.size()) +
                      " households, fewer than the " + std::to_string(n_samp) + " to be sampled");
    }
    for (std::size_t k = 0; k < n_samp; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < n_samp; ++k) total += pop.w[idx[k]];
    const auto ii = static_cast<Eigen::Index>(i);
    out.population[i] = idx.size();
    out.p_hat(ii) = total / static_cast<double>(n_samp);
    out.counts(ii) = stratum_count(idx.size(), n_samp, total);
    out.variances(ii) = stratum_variance(idx.size(), n_samp, out.p_hat(ii));
  }
  return out;
}

Eigen::VectorXd true_means(const PseudoPopulation& pop, const ArealSupport& support) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(support.size()));
  if (support.empty()) return out;
  const auto tree = envelope_index(support);
  std::vector<std::size_t> hits;
  for (std::size_t j = 0; j < pop.size(); ++j) {
    if (pop.w[j] == 0) continue;
    covering_units(tree, support, pop.x[j], pop.y[j], hits);
    for (std::size_t i : hits) out(static_cast<Eigen::Index>(i)) += 1.0;
  }
  return out;
}

}  // namespace countcos::simulate
