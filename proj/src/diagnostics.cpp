#include "countcos/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace countcos::sampler {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x, double m) {
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

double effective_sample_size(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 4) return static_cast<double>(n);
  const double m = mean_of(trace);
  std::vector<double> centred(n);
  for (std::size_t t = 0; t < n; ++t) centred[t] = trace[t] - m;
  const double c0 = std::inner_product(centred.begin(), centred.end(), centred.begin(), 0.0) / static_cast<double>(n);
  if (!(c0 > 0.0)) return static_cast<double>(n);

  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += centred[t] * centred[t + lag];
    return s / static_cast<double>(n) / c0;
  };
  // Geyer: sum pairs Gamma_k = rho_{2k} + rho_{2k+1} while positive and
  // enforce monotone decrease.
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double gamma = rho(2 * k) + rho(2 * k + 1);
    if (gamma <= 0.0) break;
    gamma = std::min(gamma, prev);
    tau += 2.0 * gamma;
    prev = gamma;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(c.data(), h);
    halves.emplace_back(c.data() + c.size() - h, h);
  }
  const std::size_t len = std::min_element(halves.begin(), halves.end(), [](auto& a, auto& b) {
                            return a.size() < b.size();
                          })->size();
  const double n = static_cast<double>(len);
  const double m = static_cast<double>(halves.size());
  std::vector<double> means, vars;
  for (auto h : halves) {
    auto s = h.first(len);
    const double mu = mean_of(s);
    means.push_back(mu);
    vars.push_back(variance_of(s, mu));
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double B = 0.0;
  for (double mu : means) B += (mu - grand) * (mu - grand);
  B *= n / (m - 1.0);
  const double W = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (!(W > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

std::vector<std::string> monitored_names(const PosteriorDraws& draws, bool gap) {
  std::vector<std::string> names;
  if (draws.states.empty()) return names;
  const auto& s = draws.states.front();
  for (Eigen::Index k = 0; k < s.beta.size(); ++k) names.push_back("beta_" + std::to_string(k));
  names.emplace_back("phi");
  names.emplace_back("sigma2_gamma");
  if (gap) {
    names.emplace_back("a");
    names.emplace_back("b");
  }
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(5, s.eta.size()); ++k) names.push_back("eta_" + std::to_string(k));
  names.emplace_back("log_total_mu");
  return names;
}

std::vector<std::vector<double>> monitored_traces(const PosteriorDraws& draws, bool gap) {
  const auto names = monitored_names(draws, gap);
  std::vector<std::vector<double>> traces(names.size(), std::vector<double>(draws.size()));
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const auto& s = draws.states[k];
    std::size_t j = 0;
    for (Eigen::Index b = 0; b < s.beta.size(); ++b) traces[j++][k] = s.beta(b);
    traces[j++][k] = s.phi;
    traces[j++][k] = s.sigma2_gamma;
    if (gap) {
      traces[j++][k] = s.a;
      traces[j++][k] = s.b;
    }
    for (Eigen::Index e = 0; e < std::min<Eigen::Index>(5, s.eta.size()); ++e) traces[j++][k] = s.eta(e);
    traces[j++][k] = std::log(draws.mu1.row(static_cast<Eigen::Index>(k)).sum());
  }
  return traces;
}

std::vector<ScalarSummary> summarize(const PosteriorDraws& draws, bool gap) {
  std::vector<ScalarSummary> out;
  if (draws.size() < 2) return out;
  const auto names = monitored_names(draws, gap);
  const auto traces = monitored_traces(draws, gap);
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto& t = traces[j];
    ScalarSummary s;
    s.name = names[j];
    s.mean = mean_of(t);
    s.sd = std::sqrt(variance_of(t, s.mean));
    std::vector<std::vector<double>> per_chain(draws.chains);
    for (std::size_t k = 0; k < t.size(); ++k) per_chain[draws.chain_of[k]].push_back(t[k]);
    s.ess = 0.0;
    for (const auto& c : per_chain) s.ess += effective_sample_size(c);
    s.rhat = split_rhat(per_chain);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace countcos::sampler
