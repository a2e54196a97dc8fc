#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "countcos/basis.hpp"
#include "countcos/covariance.hpp"
#include "countcos/geometry.hpp"
#include "countcos/model.hpp"
#include "countcos/pipeline.hpp"

namespace testing {

using namespace countcos;

inline Eigen::MatrixXd random_orthogonal(std::size_t r, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

inline Eigen::MatrixXd random_symmetric(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return 0.5 * (a + a.transpose());
}

/// Ring plus random chords, so the graph is connected.
inline Eigen::MatrixXd random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nn, nn);
  std::bernoulli_distribution edge(p);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const Eigen::Index j = (i + 1) % nn;
    if (i != j) a(i, j) = a(j, i) = 1.0;
  }
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = i + 2; j < nn; ++j) {
      if (edge(rng)) a(i, j) = a(j, i) = 1.0;
    }
  }
  return a;
}

inline Eigen::MatrixXd grid_adjacency(std::size_t nx, std::size_t ny) {
  const auto n = static_cast<Eigen::Index>(nx * ny);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      const auto k = static_cast<Eigen::Index>(y * nx + x);
      if (x + 1 < nx) a(k, k + 1) = a(k + 1, k) = 1.0;
      if (y + 1 < ny) {
        const auto up = static_cast<Eigen::Index>((y + 1) * nx + x);
        a(k, up) = a(up, k) = 1.0;
      }
    }
  }
  return a;
}

inline geometry::ArealUnit polygon_unit(const std::string& id, const std::vector<std::pair<double, double>>& pts) {
  geometry::Polygon poly;
  for (const auto& [x, y] : pts) poly.outer().emplace_back(x, y);
  poly.outer().emplace_back(pts.front().first, pts.front().second);
  geometry::MultiPolygon mp;
  mp.push_back(poly);
  return {id, mp};
}

/// nx x ny grid of [0,w]x[0,h] whose interior vertices are jittered, so
/// the cells are convex quadrilaterals with slanted edges.
inline geometry::ArealSupport jittered_grid(std::size_t nx, std::size_t ny, double w, double h, double jitter,
                                            std::mt19937_64& rng, const std::string& prefix = "a") {
  std::uniform_real_distribution<double> u(-jitter, jitter);
  const double cw = w / static_cast<double>(nx);
  const double ch = h / static_cast<double>(ny);
  std::vector<std::vector<std::pair<double, double>>> v(ny + 1, std::vector<std::pair<double, double>>(nx + 1));
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) {
      double x = static_cast<double>(i) * cw;
      double y = static_cast<double>(j) * ch;
      if (i > 0 && i < nx) x += u(rng) * cw;
      if (j > 0 && j < ny) y += u(rng) * ch;
      v[j][i] = {x, y};
    }
  }
  std::vector<geometry::ArealUnit> units;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      units.push_back(polygon_unit(prefix + std::to_string(j * nx + i),
                                   {v[j][i], v[j][i + 1], v[j + 1][i + 1], v[j + 1][i]}));
    }
  }
  return geometry::ArealSupport(std::move(units), 1);
}

/// Random triangle or rotated rectangle strictly inside [0,w] x [0,h].
inline geometry::ArealUnit random_target(const std::string& id, double w, double h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.1 * w, 0.9 * w), uy(0.1 * h, 0.9 * h), u01(0.0, 1.0);
  if (u01(rng) < 0.5) {
    return polygon_unit(id, {{ux(rng), uy(rng)}, {ux(rng), uy(rng)}, {ux(rng), uy(rng)}});
  }
  const double cx = 0.5 * w + (u01(rng) - 0.5) * 0.2 * w;
  const double cy = 0.5 * h + (u01(rng) - 0.5) * 0.2 * h;
  const double m = std::min(w, h);
  const double a = (0.05 + 0.2 * u01(rng)) * m;
  const double b = (0.05 + 0.2 * u01(rng)) * m;
  const double t = 3.14159 * u01(rng);
  const double c = std::cos(t), s = std::sin(t);
  std::vector<std::pair<double, double>> pts;
  for (auto [dx, dy] : {std::pair{-a, -b}, std::pair{a, -b}, std::pair{a, b}, std::pair{-a, b}}) {
    pts.emplace_back(cx + c * dx - s * dy, cy + s * dx + c * dy);
  }
  return polygon_unit(id, pts);
}

/// Gridded problem with data drawn from the model itself.
struct ToyProblem {
  geometry::ArealSupport support;
  pipeline::SpatialStructure structure;
  model::ModelState truth;
  model::SurveyDataset data;
};

inline ToyProblem toy_problem(std::size_t nx, std::size_t ny, std::uint64_t seed, std::size_t rank = 0,
                              double log_mean = std::log(200.0), bool coarse_level = false) {
  ToyProblem t;
  t.support = geometry::rect_tiling(0.0, 0.0, static_cast<double>(nx), static_cast<double>(ny), nx, ny, "u", 1);
  basis::BasisOptions opts;
  if (rank > 0) opts.rank = rank;
  t.structure = pipeline::build_structure(t.support, basis::CovariateMatrix::intercept(t.support.size()), opts);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto n1 = static_cast<Eigen::Index>(t.support.size());
  const auto& b = t.structure.basis;

  t.truth.beta = Eigen::VectorXd::Constant(1, log_mean);
  t.truth.phi = 0.5;
  t.truth.sigma2_gamma = 0.01;
  covariance::CovarianceFactor k = covariance::k_matrix({0.0, 1.0, t.truth.phi}, b, covariance::PriorKind::MI);
  t.truth.eta = k.sample(rng);
  t.truth.xi.resize(n1);
  for (Eigen::Index i = 0; i < n1; ++i) t.truth.xi(i) = std::sqrt(t.truth.sigma2_gamma) * normal(rng);
  const Eigen::VectorXd y = t.structure.covariates.X * t.truth.beta + b.Psi * t.truth.eta + t.truth.xi;
  const Eigen::VectorXd mu = y.array().exp();

  std::vector<model::SupportData> levels(1);
  levels[0].level = 1;
  levels[0].ids = t.support.ids();
  levels[0].counts.resize(n1);
  levels[0].variances.resize(n1);
  const double sigma_eps = 0.3;
  for (Eigen::Index i = 0; i < n1; ++i) {
    levels[0].counts(i) = static_cast<double>(std::poisson_distribution<long long>(mu(i))(rng));
    levels[0].variances(i) = std::exp(y(i) + sigma_eps * normal(rng));
  }
  if (coarse_level) {
    const geometry::ArealSupport coarse =
        geometry::rect_tiling(0.0, 0.0, static_cast<double>(nx), static_cast<double>(ny), 2, 1, "c", 2);
    geometry::CosWeightMatrix w = geometry::cos_weights(t.support, coarse);
    model::SupportData sd;
    sd.level = 2;
    sd.ids = coarse.ids();
    const Eigen::VectorXd cm = w.H * mu;
    sd.counts.resize(cm.size());
    sd.variances.resize(cm.size());
    for (Eigen::Index j = 0; j < cm.size(); ++j) {
      sd.counts(j) = static_cast<double>(std::poisson_distribution<long long>(cm(j))(rng));
      sd.variances(j) = cm(j) * std::exp(sigma_eps * normal(rng));
    }
    sd.weights = w.H;
    levels.push_back(std::move(sd));
  }
  t.truth.sigma2_eps = Eigen::VectorXd::Constant(
      static_cast<Eigen::Index>(n1 + (coarse_level ? 2 : 0)), sigma_eps * sigma_eps);
  t.data = model::SurveyDataset(t.support.size(), std::move(levels));
  return t;
}

}  // namespace testing
