#include <doctest.h>

#include <numeric>
#include <random>

#include "countcos/inference.hpp"
#include "support.hpp"

using namespace countcos;
using namespace countcos::inference;

namespace {

DrawMatrix random_draws(Eigen::Index k, Eigen::Index n, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(4.0, 25.0);
  DrawMatrix d(k, n);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = g(rng);
  return d;
}

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("type 7 quantiles") {
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.05) == doctest::Approx(1.15));
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 1.0) == 4.0);
  CHECK(quantile({7.0}, 0.3) == 7.0);
  CHECK_THROWS_AS((void)quantile({}, 0.5), DataError);
}

TEST_CASE("identity target reproduces the fine-level summaries") {
  std::mt19937_64 rng(1);
  const auto support = geometry::rect_tiling(0, 0, 2, 2, 2, 2);
  const DrawMatrix mu1 = random_draws(101, 4, rng);
  const auto w = geometry::identity_weights(support);
  const CosResult cos = cos_posterior(mu1, support.checksum(), w);
  const CosResult direct = summarize_draws(mu1, support.ids());
  CHECK(cos.target_ids == direct.target_ids);
  CHECK(cos.mean == direct.mean);
  CHECK(cos.variance == direct.variance);
  CHECK(cos.lower == direct.lower);
  CHECK(cos.upper == direct.upper);
}

TEST_CASE("whole-domain target sums every draw") {
  std::mt19937_64 rng(2);
  const auto support = geometry::rect_tiling(0, 0, 2, 2, 2, 2);
  const geometry::ArealSupport whole({geometry::ArealUnit::rectangle("all", 0, 0, 2, 2)}, 0);
  const auto w = geometry::cos_weights(support, whole);
  const DrawMatrix mu1 = random_draws(50, 4, rng);
  CosOptions opts;
  opts.keep_draws = true;
  const CosResult cos = cos_posterior(mu1, support.checksum(), w, opts);
  REQUIRE(cos.draws.has_value());
  for (Eigen::Index k = 0; k < 50; ++k) CHECK((*cos.draws)(k, 0) == doctest::Approx(mu1.row(k).sum()).epsilon(1e-12));
  CHECK(cos.mean(0) == doctest::Approx(mu1.colwise().mean().sum()).epsilon(1e-12));
}

TEST_CASE("posterior mean is the weighted posterior mean and intervals bracket it") {
  std::mt19937_64 rng(3);
  const auto support = testing::jittered_grid(3, 3, 1.0, 1.0, 0.2, rng, "u");
  std::vector<geometry::ArealUnit> targets;
  for (int m = 0; m < 5; ++m) targets.push_back(testing::random_target("t" + std::to_string(m), 3.0, 3.0, rng));
  const geometry::ArealSupport target(std::move(targets), 0);
  const auto w = geometry::cos_weights(support, target);
  const DrawMatrix mu1 = random_draws(400, 9, rng);
  const CosResult cos = cos_posterior(mu1, support.checksum(), w);
  const Eigen::VectorXd expected = w.H * mu1.colwise().mean().transpose();
  for (Eigen::Index m = 0; m < 5; ++m) {
    CHECK(cos.mean(m) == doctest::Approx(expected(m)).epsilon(1e-12));
    CHECK(cos.lower(m) <= cos.mean(m));
    CHECK(cos.upper(m) >= cos.mean(m));
    CHECK(cos.variance(m) >= 0.0);
  }
}

TEST_CASE("projection is linear in the draws") {
  std::mt19937_64 rng(4);
  const auto support = geometry::rect_tiling(0, 0, 2, 2, 2, 2);
  const geometry::ArealSupport target({geometry::ArealUnit::rectangle("b", 0.3, 0.2, 1.7, 1.1)}, 0);
  const auto w = geometry::cos_weights(support, target);
  const DrawMatrix a = random_draws(30, 4, rng);
  const DrawMatrix b = random_draws(30, 4, rng);
  const DrawMatrix combo = 2.0 * a + 3.0 * b;
  const double lhs = cos_posterior(combo, support.checksum(), w).mean(0);
  const double rhs =
      2.0 * cos_posterior(a, support.checksum(), w).mean(0) + 3.0 * cos_posterior(b, support.checksum(), w).mean(0);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("mismatched source support is rejected") {
  std::mt19937_64 rng(5);
  const auto support = geometry::rect_tiling(0, 0, 2, 2, 2, 2);
  const auto other = geometry::rect_tiling(0, 0, 2, 2.5, 2, 2);
  const auto w = geometry::identity_weights(other);
  CHECK_THROWS_AS((void)cos_posterior(random_draws(5, 4, rng), support.checksum(), w), DataError);
  const auto w9 = geometry::identity_weights(geometry::rect_tiling(0, 0, 3, 3, 3, 3));
  CHECK_THROWS_AS((void)cos_posterior(random_draws(5, 4, rng), w9.source_checksum, w9), DataError);
}

TEST_CASE("simple areal interpolation examples") {
  const auto support = geometry::rect_tiling(0, 0, 2, 2, 2, 2);
  const Eigen::Vector4d z(10, 20, 30, 40);
  CHECK(simple_areal_interpolation(z, geometry::identity_weights(support)) == z);
  const geometry::ArealSupport pair({geometry::ArealUnit::rectangle("b", 0, 0, 2, 1)}, 0);
  CHECK(simple_areal_interpolation(z, geometry::cos_weights(support, pair))(0) == doctest::Approx(30.0));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    if (x1 - x0 < 1e-3 || y1 - y0 < 1e-3) continue;
    const geometry::ArealSupport t({geometry::ArealUnit::rectangle("b", x0, y0, x1, y1)}, 0);
    double oracle = 0.0;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) oracle += z(2 * j + i) * overlap(x0, x1, i, i + 1) * overlap(y0, y1, j, j + 1);
    CHECK(simple_areal_interpolation(z, geometry::cos_weights(support, t))(0) ==
          doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("p-value tie convention") {
  const std::vector<double> ties(25, 0.0);
  CHECK(pvalue_from_log_ratios(ties) == 0.5);
  const std::vector<double> mixed{1.0, -1.0, 0.0, 2.0};
  CHECK(pvalue_from_log_ratios(mixed) == doctest::Approx(0.625));
}

TEST_CASE("predictive p-value responds to dispersion") {
  const auto toy = testing::toy_problem(3, 3, 12, 3);
  const auto n = static_cast<Eigen::Index>(toy.support.size());
  const model::Model fitted(toy.structure.covariates, toy.structure.basis, toy.data, {}, model::ModelKind::CS);
  model::ModelState state = toy.truth;
  state.sigma2_eps = Eigen::VectorXd::Constant(n, 0.09);
  const Eigen::VectorXd mu = fitted.latent_means(state).mu1;

  sampler::PosteriorDraws draws;
  draws.states.assign(200, state);

  model::SupportData tight;
  tight.ids = toy.support.ids();
  tight.counts = mu.array().round();
  tight.variances = mu;
  const model::SurveyDataset tight_data(static_cast<std::size_t>(n), {tight});
  const model::Model tight_model(toy.structure.covariates, toy.structure.basis, tight_data, {}, model::ModelKind::CS);
  CHECK(posterior_predictive_pvalue(draws, tight_model, 1) < 0.05);

  model::SupportData wild = tight;
  for (Eigen::Index i = 0; i < n; ++i) {
    wild.counts(i) = i % 2 == 0 ? 0.0 : std::round(3.0 * mu(i));
    wild.variances(i) = mu(i) * (i % 2 == 0 ? 20.0 : 0.05);
  }
  const model::SurveyDataset wild_data(static_cast<std::size_t>(n), {wild});
  const model::Model wild_model(toy.structure.covariates, toy.structure.basis, wild_data, {}, model::ModelKind::CS);
  CHECK(posterior_predictive_pvalue(draws, wild_model, 1) > 0.95);
}

TEST_CASE("paired absolute deviation examples") {
  const std::vector<double> truth{1.0, 5.0, 9.0};
  CHECK(pad(truth, truth, truth) == 0.0);
  const std::vector<double> est{3.0, 4.0, 10.0};
  CHECK(pad(est, est, truth) == 0.0);
  const std::vector<double> off{2.0, 6.0, 10.0};
  CHECK(pad(off, truth, truth) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)pad(off, truth, std::vector<double>{1.0}), DataError);
  CHECK_THROWS_AS((void)pad(std::vector<double>{}, std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST_CASE("paired absolute deviation against an arithmetic oracle") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(100.0, 30.0);
  std::vector<double> truth(36), md(36), cs(36);
  for (std::size_t m = 0; m < 36; ++m) {
    truth[m] = normal(rng);
    md[m] = normal(rng);
    cs[m] = normal(rng);
  }
  std::vector<double> diff(36);
  std::transform(truth.begin(), truth.end(), md.begin(), diff.begin(), [](double t, double e) { return std::abs(t - e); });
  const double mean_md = std::accumulate(diff.begin(), diff.end(), 0.0) / 36.0;
  std::transform(truth.begin(), truth.end(), cs.begin(), diff.begin(), [](double t, double e) { return std::abs(t - e); });
  const double mean_cs = std::accumulate(diff.begin(), diff.end(), 0.0) / 36.0;
  CHECK(pad(md, cs, truth) == doctest::Approx(mean_md - mean_cs).epsilon(1e-12));
}

TEST_CASE("sign test binomial tail") {
  CHECK(sign_test_pvalue(50, 50) == doctest::Approx(std::pow(0.5, 50)).epsilon(1e-10));
  CHECK(sign_test_pvalue(50, 50) == doctest::Approx(8.88e-16).epsilon(1e-3));
  CHECK(sign_test_pvalue(49, 50) == doctest::Approx(51.0 * std::pow(0.5, 50)).epsilon(1e-10));
  CHECK(sign_test_pvalue(0, 10) == doctest::Approx(1.0));
  // 10 trials: P(X >= 8) = (45 + 10 + 1) / 1024
  CHECK(sign_test_pvalue(8, 10) == doctest::Approx(56.0 / 1024.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)sign_test_pvalue(11, 10), DataError);
}

}
