#include <doctest.h>

#include <sstream>

#include "countcos/geojson.hpp"
#include "countcos/geometry.hpp"
#include "support.hpp"

using namespace countcos;
using namespace countcos::geometry;

TEST_SUITE("geometry") {

TEST_CASE("overlap_fraction examples") {
  const auto a = ArealUnit::rectangle("a", 0, 0, 1, 1);
  const auto far = ArealUnit::rectangle("b", 5, 5, 6, 6);
  const auto wide = ArealUnit::rectangle("c", 0, 0, 2, 1);
  CHECK(overlap_fraction(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(overlap_fraction(a, far) == 0.0);
  CHECK(overlap_fraction(wide, a) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("areal unit validation") {
  CHECK_THROWS_AS(testing::polygon_unit("bowtie", {{0, 0}, {2, 2}, {2, 0}, {0, 2}}), GeometryError);
  CHECK_THROWS_AS(testing::polygon_unit("flat", {{0, 0}, {1, 0}, {2, 0}}), GeometryError);
}

TEST_CASE("clockwise input is corrected and area matches shoelace") {
  const auto u = testing::polygon_unit("cw", {{0, 0}, {0, 2}, {3, 2}, {3, 0}});
  CHECK(u.area() == doctest::Approx(6.0));
  CHECK(u.shoelace_area() == doctest::Approx(u.area()).epsilon(1e-9));
}

TEST_CASE("polygon with hole") {
  Polygon p;
  for (auto [x, y] : {std::pair{0., 0.}, {4., 0.}, {4., 4.}, {0., 4.}, {0., 0.}}) p.outer().emplace_back(x, y);
  p.inners().emplace_back();
  for (auto [x, y] : {std::pair{1., 1.}, {1., 2.}, {2., 2.}, {2., 1.}, {1., 1.}}) p.inners()[0].emplace_back(x, y);
  MultiPolygon mp{p};
  const ArealUnit holed("h", mp);
  CHECK(holed.area() == doctest::Approx(15.0));
  CHECK(holed.shoelace_area() == doctest::Approx(15.0));
  CHECK_FALSE(holed.covers(1.5, 1.5));
  CHECK(holed.covers(3.0, 3.0));
  const auto hole_filler = ArealUnit::rectangle("f", 1, 1, 2, 2);
  CHECK(intersection_area(holed, hole_filler) == doctest::Approx(0.0).epsilon(1e-12));
  const auto straddle = ArealUnit::rectangle("s", 0, 0, 2, 2);
  CHECK(intersection_area(holed, straddle) == doctest::Approx(3.0));
}

TEST_CASE("duplicate ids are rejected") {
  std::vector<ArealUnit> units{ArealUnit::rectangle("x", 0, 0, 1, 1), ArealUnit::rectangle("x", 1, 0, 2, 1)};
  CHECK_THROWS_AS(ArealSupport(units, 1), DataError);
}

TEST_CASE("target equal to source gives the identity") {
  const auto s = rect_tiling(0, 0, 3, 2, 3, 2);
  const auto w = cos_weights(s, rect_tiling(0, 0, 3, 2, 3, 2, "u", ArealSupport::kTargetLevel));
  const Eigen::MatrixXd dense(w.H);
  CHECK((dense - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  const auto id = identity_weights(s);
  CHECK((Eigen::MatrixXd(id.H) - dense).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(id.source_checksum == s.checksum());
}

TEST_CASE("union of two source units") {
  const auto s = rect_tiling(0, 0, 4, 1, 4, 1);
  std::vector<ArealUnit> t{ArealUnit::rectangle("b", 0, 0, 2, 1)};
  const auto w = cos_weights(s, ArealSupport(t, ArealSupport::kTargetLevel));
  const Eigen::RowVectorXd row = Eigen::MatrixXd(w.H).row(0);
  CHECK(row(0) == doctest::Approx(1.0));
  CHECK(row(1) == doctest::Approx(1.0));
  CHECK(row(2) == 0.0);
  CHECK(row(3) == 0.0);
  const auto list = w.as_list();
  REQUIRE(list.size() == 1);
  CHECK(list[0].target_id == "b");
}

TEST_CASE("weights agree with a Monte-Carlo area oracle") {
  std::mt19937_64 rng(11);
  const auto source = testing::jittered_grid(2, 2, 4.0, 4.0, 0.2, rng);
  std::uniform_real_distribution<double> u(0.2, 3.8);
  double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  const ArealUnit target = ArealUnit::rectangle("t", x0, y0, x1, y1);
  const auto w = cos_weights(source, ArealSupport({target}, 0));
  const Eigen::RowVectorXd h = Eigen::MatrixXd(w.H).row(0);

  const std::size_t n = 1000000;
  std::vector<std::size_t> hits(4, 0), inside(4, 0);
  std::uniform_real_distribution<double> ux(0.0, 4.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = ux(rng), y = ux(rng);
    const bool in_t = target.covers(x, y);
    for (std::size_t i = 0; i < 4; ++i) {
      if (source.unit(i).covers(x, y)) {
        ++inside[i];
        if (in_t) ++hits[i];
      }
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double p = static_cast<double>(hits[i]) / static_cast<double>(inside[i]);
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(inside[i]));
    CHECK(std::fabs(h(static_cast<Eigen::Index>(i)) - p) <= 3 * se + 1e-9);
  }
}

TEST_CASE("weight conservation, symmetry and scale invariance on random geometry") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto source = testing::jittered_grid(5, 4, 10.0, 8.0, 0.25, rng);
    std::vector<ArealUnit> targets;
    for (int m = 0; m < 3; ++m) targets.push_back(testing::random_target("t" + std::to_string(m), 10.0, 8.0, rng));
    const ArealSupport target(targets, 0);
    const auto w = cos_weights(source, target);
    Eigen::VectorXd areas(static_cast<Eigen::Index>(source.size()));
    for (std::size_t i = 0; i < source.size(); ++i) areas(static_cast<Eigen::Index>(i)) = source.unit(i).area();
    const Eigen::VectorXd covered = w.H * areas;
    for (std::size_t m = 0; m < target.size(); ++m) {
      CHECK(covered(static_cast<Eigen::Index>(m)) == doctest::Approx(target.unit(m).area()).epsilon(1e-6));
    }
    CHECK(w.uncovered.empty());
    for (int k = 0; k < w.H.nonZeros(); ++k) {
      CHECK(w.H.valuePtr()[k] >= 0.0);
      CHECK(w.H.valuePtr()[k] <= 1.0 + 1e-9);
    }

    const auto& a = source.unit(static_cast<std::size_t>(rep) % source.size());
    const auto& b = target.unit(0);
    CHECK(overlap_fraction(a, b) * a.area() == doctest::Approx(overlap_fraction(b, a) * b.area()).epsilon(1e-9));

    std::vector<ArealUnit> ss, ts;
    for (const auto& u : source.units()) ss.push_back(u.scaled(3.7));
    for (const auto& u : target.units()) ts.push_back(u.scaled(3.7));
    const auto ws = cos_weights(ArealSupport(ss), ArealSupport(ts, 0));
    CHECK((Eigen::MatrixXd(ws.H) - Eigen::MatrixXd(w.H)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("target partition gives unit column sums") {
  std::mt19937_64 rng(9);
  const auto source = testing::jittered_grid(6, 5, 6.0, 5.0, 0.3, rng);
  const auto target = rect_tiling({0.0, 1.3, 2.9, 6.0}, {0.0, 2.2, 5.0}, "t", 0);
  const auto w = cos_weights(source, target);
  const Eigen::RowVectorXd sums = Eigen::MatrixXd(w.H).colwise().sum();
  CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-6);
}

TEST_CASE("uncovered targets are reported") {
  const auto s = rect_tiling(0, 0, 2, 2, 2, 2);
  std::vector<ArealUnit> t{ArealUnit::rectangle("in", 0, 0, 1, 1), ArealUnit::rectangle("half", 1, 1, 3, 2)};
  const auto w = cos_weights(s, ArealSupport(t, 0));
  REQUIRE(w.uncovered.size() == 1);
  CHECK(w.uncovered[0] == 1);
  CHECK(w.gap_fraction[1] == doctest::Approx(0.5));
}

TEST_CASE("raster approximation is close to exact clipping") {
  const auto a = ArealUnit::rectangle("a", 0, 0, 2, 2);
  const auto b = testing::polygon_unit("b", {{1, 0.5}, {3, 0.5}, {2, 3}});
  CHECK(raster_intersection_area(a, b, 0.005) == doctest::Approx(intersection_area(a, b)).epsilon(1e-2));
}

TEST_CASE("adjacency examples") {
  const auto g2 = rect_tiling(0, 0, 2, 2, 2, 2);
  const Eigen::MatrixXd rook = adjacency_from_boundaries(g2, EdgeRule::Rook);
  CHECK(rook.rowwise().sum().minCoeff() == 2.0);
  CHECK(rook.rowwise().sum().maxCoeff() == 2.0);
  CHECK(rook.trace() == 0.0);
  const Eigen::MatrixXd queen = adjacency_from_boundaries(g2, EdgeRule::Queen);
  CHECK(queen.sum() == 12.0);

  const auto g6 = rect_tiling(1, 1, 12, 12, 6, 6);
  const Eigen::MatrixXd a6 = adjacency_from_boundaries(g6);
  CHECK((a6 - a6.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a6 - testing::grid_adjacency(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a6.row(0).sum() == 2.0);
  CHECK(a6.row(1).sum() == 3.0);
  CHECK(a6.row(7).sum() == 4.0);

  std::vector<ArealUnit> units{ArealUnit::rectangle("a", 0, 0, 1, 1), ArealUnit::rectangle("b", 5, 5, 6, 6)};
  std::vector<std::size_t> isolated;
  const auto a = adjacency_from_boundaries(ArealSupport(units), EdgeRule::Rook, &isolated);
  CHECK(a.sum() == 0.0);
  CHECK(isolated.size() == 2);
}

TEST_CASE("overlapping partition is rejected") {
  std::vector<ArealUnit> units{ArealUnit::rectangle("a", 0, 0, 2, 1), ArealUnit::rectangle("b", 1, 0, 3, 1)};
  CHECK_THROWS_AS(ArealSupport(units).validate_partition(), GeometryError);
  CHECK_NOTHROW(rect_tiling(0, 0, 3, 3, 3, 3).validate_partition());
}

TEST_CASE("GeoJSON round trip keeps the checksum") {
  std::mt19937_64 rng(2);
  const auto s = testing::jittered_grid(3, 3, 3.0, 3.0, 0.3, rng);
  const std::string text = to_geojson(s, {{"value", std::vector<double>(9, 1.5)}});
  const auto back = parse_geojson(text, 1);
  CHECK(back.checksum() == s.checksum());
  CHECK(back.ids() == s.ids());
}

TEST_CASE("GeoJSON errors") {
  CHECK_THROWS_AS((void)parse_geojson("{\"type\":\"FeatureCollection\",\"features\":[{\"type\":\"Feature\","
                                "\"properties\":{},\"geometry\":{\"type\":\"Polygon\",\"coordinates\":"
                                "[[[0,0],[1,0],[1,1],[0,0]]]}}]}"),
                  DataError);
  CHECK_THROWS_AS((void)parse_geojson("not json"), DataError);
  const auto ok = parse_geojson("{\"type\":\"FeatureCollection\",\"features\":[{\"type\":\"Feature\","
                                "\"properties\":{\"id\":7},\"geometry\":{\"type\":\"Polygon\",\"coordinates\":"
                                "[[[0,0],[1,0],[1,1],[0,0]]]}}]}");
  CHECK(ok.unit(0).id() == "7");
  CHECK(ok.unit(0).area() == doctest::Approx(0.5));
}

TEST_CASE("weights CSV") {
  const auto s = rect_tiling(0, 0, 2, 1, 2, 1);
  std::ostringstream out;
  write_weights_csv(out, identity_weights(s));
  CHECK(out.str() == "target_id,u0,u1\nu0,1,0\nu1,0,1\n");
}

}
