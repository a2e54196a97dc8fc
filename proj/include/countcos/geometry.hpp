#pragma once

/// @file geometry.hpp
/// @brief Areal supports, overlap areas and change-of-support weights.
///
/// Coordinates are planar (pre-projected). Polygons follow the GeoJSON
/// convention: outer rings counter-clockwise, holes clockwise, rings
/// closed. Inputs with the opposite orientation are corrected on
/// construction; invalid polygons (self-intersections, zero area) are
/// rejected with GeometryError.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>

#include "countcos/errors.hpp"

namespace countcos::geometry {

namespace bg = boost::geometry;

using Point = bg::model::d2::point_xy<double>;
using Polygon = bg::model::polygon<Point, /*ClockWise=*/false, /*Closed=*/true>;
using MultiPolygon = bg::model::multi_polygon<Polygon>;
using Box = bg::model::box<Point>;
using Ring = Polygon::ring_type;

class ArealUnit {
 public:
  ArealUnit(std::string id, MultiPolygon shape);

  /// Axis-aligned rectangle [x0,x1]x[y0,y1].
  static ArealUnit rectangle(std::string id, double x0, double y0, double x1, double y1);

  [[nodiscard]] const std::string& id() const noexcept { return id_; }
  [[nodiscard]] const MultiPolygon& shape() const noexcept { return shape_; }
  [[nodiscard]] double area() const noexcept { return area_; }
  [[nodiscard]] const Box& envelope() const noexcept { return envelope_; }

  /// Shoelace area recomputed from the rings (outer minus holes).
  [[nodiscard]] double shoelace_area() const;

  /// Point-in-polygon including the boundary.
  [[nodiscard]] bool covers(double x, double y) const;

  /// Same unit with every coordinate multiplied by `factor`.
  [[nodiscard]] ArealUnit scaled(double factor) const;

 private:
  std::string id_;
  MultiPolygon shape_;
  double area_ = 0.0;
  Box envelope_;
};

/// A labelled set of areal units. Level 1 is the finest source support;
/// target supports use kTargetLevel.
class ArealSupport {
 public:
  static constexpr int kTargetLevel = 0;

  ArealSupport() = default;
  explicit ArealSupport(std::vector<ArealUnit> units, int level = 1);

  [[nodiscard]] std::size_t size() const noexcept { return units_.size(); }
  [[nodiscard]] bool empty() const noexcept { return units_.empty(); }
  [[nodiscard]] const ArealUnit& unit(std::size_t i) const { return units_.at(i); }
  [[nodiscard]] const std::vector<ArealUnit>& units() const noexcept { return units_; }
  [[nodiscard]] int level() const noexcept { return level_; }
  [[nodiscard]] std::optional<std::size_t> index_of(const std::string& id) const;
  [[nodiscard]] std::vector<std::string> ids() const;
  [[nodiscard]] double total_area() const;
  [[nodiscard]] Box bounds() const;

  /// Order-sensitive checksum over ids and coordinates. Draw stores and
  /// weight matrices carry it so that mismatched supports are detected.
  [[nodiscard]] std::uint64_t checksum() const noexcept { return checksum_; }

  /// Throws GeometryError if two units overlap by more than
  /// rel_tol * min(area).
  void validate_partition(double rel_tol = 1e-9) const;

 private:
  std::vector<ArealUnit> units_;
  int level_ = 1;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t checksum_ = 0;
};

/// area(a ∩ b) by exact polygon clipping. Throws GeometryError when the
/// clipped result fails validation.
[[nodiscard]] double intersection_area(const ArealUnit& a, const ArealUnit& b);

/// area(a ∩ b) approximated on a square raster of the given cell size,
/// counting cell centres covered by both units.
[[nodiscard]] double raster_intersection_area(const ArealUnit& a, const ArealUnit& b,
                                              double cell_size);

/// area(b ∩ a) / area(a).
[[nodiscard]] double overlap_fraction(const ArealUnit& a, const ArealUnit& b);

struct ClipOptions {
  /// When set, pairs whose exact clip fails fall back to the raster
  /// approximation with this cell size instead of throwing.
  std::optional<double> raster_cell_size;
  /// Weights below this (relative to 1) are dropped as clipping noise.
  double sliver_tolerance = 1e-12;
  /// Target units whose uncovered fraction exceeds this are reported.
  double gap_tolerance = 1e-6;
};

/// Dense per-target weight vector.
struct CosWeights {
  std::string target_id;
  Eigen::VectorXd weights;
};

/// Row-per-target sparse weight matrix H with H(m,i) = |B_m ∩ A_i| / |A_i|.
struct CosWeightMatrix {
  std::vector<std::string> target_ids;
  std::vector<std::string> source_ids;
  Eigen::SparseMatrix<double, Eigen::RowMajor> H;
  std::uint64_t source_checksum = 0;
  /// Uncovered fraction of each target (1 - covered area / target area).
  std::vector<double> gap_fraction;
  /// Indices of targets whose gap fraction exceeds the tolerance.
  std::vector<std::size_t> uncovered;
  /// Number of pairs that used the raster fallback.
  std::size_t raster_fallbacks = 0;

  [[nodiscard]] std::vector<CosWeights> as_list() const;
  [[nodiscard]] std::size_t rows() const noexcept { return target_ids.size(); }
  [[nodiscard]] std::size_t cols() const noexcept { return source_ids.size(); }
};

[[nodiscard]] CosWeightMatrix cos_weights(const ArealSupport& source, const ArealSupport& target,
                                          const ClipOptions& options = {});

/// Identity weights for a support onto itself, without clipping.
[[nodiscard]] CosWeightMatrix identity_weights(const ArealSupport& source);

enum class EdgeRule { Rook, Queen };

/// Symmetric 0/1 adjacency with zero diagonal. Rook: shared boundary of
/// positive length. Queen: at least one shared point.
[[nodiscard]] Eigen::MatrixXd adjacency_from_boundaries(
    const ArealSupport& support, EdgeRule rule = EdgeRule::Rook,
    std::vector<std::size_t>* isolated = nullptr);

/// Regular nx-by-ny tiling of [x0,x1]x[y0,y1]. Ids are "<prefix><k>" in
/// row-major order from the lower-left corner.
[[nodiscard]] ArealSupport rect_tiling(double x0, double y0, double x1, double y1,
                                       std::size_t nx, std::size_t ny,
                                       const std::string& prefix = "u", int level = 1);

/// Tiling with explicit column and row break points (both increasing,
/// first/last being the domain edges).
[[nodiscard]] ArealSupport rect_tiling(const std::vector<double>& xbreaks,
                                       const std::vector<double>& ybreaks,
                                       const std::string& prefix = "u", int level = 1);

}  // namespace countcos::geometry
