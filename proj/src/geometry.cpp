#include "countcos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/geometry/index/rtree.hpp>

#include "countcos/hash.hpp"

namespace countcos::geometry {

namespace bgi = boost::geometry::index;

namespace {

using IndexedBox = std::pair<Box, std::size_t>;
using BoxTree = bgi::rtree<IndexedBox, bgi::quadratic<16>>;

BoxTree build_tree(const ArealSupport& support) {
  std::vector<IndexedBox> boxes;
  boxes.reserve(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) boxes.emplace_back(support.unit(i).envelope(), i);
  return BoxTree(boxes.begin(), boxes.end());
}

double ring_signed_area(const Ring& ring) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
    s += ring[k].x() * ring[k + 1].y() - ring[k + 1].x() * ring[k].y();
  }
  return 0.5 * s;
}

Box expand(const Box& b, double pad) {
  return Box(Point(b.min_corner().x() - pad, b.min_corner().y() - pad),
             Point(b.max_corner().x() + pad, b.max_corner().y() + pad));
}

double box_extent(const Box& b) {
  return std::max(b.max_corner().x() - b.min_corner().x(), b.max_corner().y() - b.min_corner().y());
}

struct Segment {
  Point p, q;
};

std::vector<Segment> segments_of(const MultiPolygon& mp) {
  std::vector<Segment> out;
  auto add_ring = [&out](const Ring& r) {
    for (std::size_t k = 0; k + 1 < r.size(); ++k) out.push_back({r[k], r[k + 1]});
  };
  for (const auto& poly : mp) {
    add_ring(poly.outer());
    for (const auto& hole : poly.inners()) add_ring(hole);
  }
  return out;
}

// Length of the collinear overlap of two segments, 0 if they are not
// collinear within `tol`.
double collinear_overlap(const Segment& s, const Segment& t, double tol) {
  const double dx = s.q.x() - s.p.x();
  const double dy = s.q.y() - s.p.y();
  const double len = std::hypot(dx, dy);
  if (len <= tol) return 0.0;
  const double ux = dx / len;
  const double uy = dy / len;
  // distance of t's endpoints from the line through s
  const double d1 = std::fabs((t.p.x() - s.p.x()) * uy - (t.p.y() - s.p.y()) * ux);
  const double d2 = std::fabs((t.q.x() - s.p.x()) * uy - (t.q.y() - s.p.y()) * ux);
  if (d1 > tol || d2 > tol) return 0.0;
  const double a = (t.p.x() - s.p.x()) * ux + (t.p.y() - s.p.y()) * uy;
  const double b = (t.q.x() - s.p.x()) * ux + (t.q.y() - s.p.y()) * uy;
  const double lo = std::max(0.0, std::min(a, b));
  const double hi = std::min(len, std::max(a, b));
  return std::max(0.0, hi - lo);
}

double shared_boundary_length(const ArealUnit& a, const ArealUnit& b, double tol) {
  const auto sa = segments_of(a.shape());
  const auto sb = segments_of(b.shape());
  const Box eb = expand(b.envelope(), tol);
  double total = 0.0;
  for (const auto& s : sa) {
    Box bs;
    bg::envelope(bg::model::segment<Point>(s.p, s.q), bs);
    if (!bg::intersects(expand(bs, tol), eb)) continue;
    for (const auto& t : sb) total += collinear_overlap(s, t, tol);
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// ArealUnit

ArealUnit::ArealUnit(std::string id, MultiPolygon shape) : id_(std::move(id)), shape_(std::move(shape)) {
  if (shape_.empty()) throw GeometryError("unit '" + id_ + "': empty geometry");
  bg::correct(shape_);
  bg::validity_failure_type failure;
  if (!bg::is_valid(shape_, failure)) {
    std::ostringstream msg;
    msg << "unit '" << id_ << "': invalid polygon (" << bg::validity_failure_type_message(failure) << ")";
    throw GeometryError(msg.str());
  }
  area_ = bg::area(shape_);
  if (!(area_ > 0.0)) throw GeometryError("unit '" + id_ + "': non-positive area");
  bg::envelope(shape_, envelope_);
}

ArealUnit ArealUnit::rectangle(std::string id, double x0, double y0, double x1, double y1) {
  Polygon p;
  auto& ring = p.outer();
  ring.assign({Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1), Point(x0, y0)});
  return ArealUnit(std::move(id), MultiPolygon{p});
}

double ArealUnit::shoelace_area() const {
  double total = 0.0;
  for (const auto& poly : shape_) {
    total += ring_signed_area(poly.outer());
    for (const auto& hole : poly.inners()) total += ring_signed_area(hole);
  }
  return total;
}

bool ArealUnit::covers(double x, double y) const {
  const Point pt(x, y);
  if (!bg::covered_by(pt, envelope_)) return false;
  return bg::covered_by(pt, shape_);
}

ArealUnit ArealUnit::scaled(double factor) const {
  MultiPolygon out = shape_;
  for (auto& poly : out) {
    auto scale_ring = [factor](Ring& r) {
      for (auto& p : r) p = Point(p.x() * factor, p.y() * factor);
    };
    scale_ring(poly.outer());
    for (auto& h : poly.inners()) scale_ring(h);
  }
  return ArealUnit(id_, std::move(out));
}

// ---------------------------------------------------------------------------
// ArealSupport

ArealSupport::ArealSupport(std::vector<ArealUnit> units, int level) : units_(std::move(units)), level_(level) {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(units_.size()));
  for (std::size_t i = 0; i < units_.size(); ++i) {
    const auto& u = units_[i];
    if (!index_.emplace(u.id(), i).second) throw DataError("duplicate areal unit id '" + u.id() + "'");
    h.update(u.id());
    for (const auto& poly : u.shape()) {
      auto hash_ring = [&h](const Ring& r) {
        h.update(static_cast<std::uint64_t>(r.size()));
        for (const auto& p : r) {
          h.update(p.x());
          h.update(p.y());
        }
      };
      hash_ring(poly.outer());
      for (const auto& hole : poly.inners()) hash_ring(hole);
    }
  }
  checksum_ = h.digest();
}

std::optional<std::size_t> ArealSupport::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ArealSupport::ids() const {
  std::vector<std::string> out;
  out.reserve(units_.size());
  for (const auto& u : units_) out.push_back(u.id());
  return out;
}

double ArealSupport::total_area() const {
  double s = 0.0;
  for (const auto& u : units_) s += u.area();
  return s;
}

Box ArealSupport::bounds() const {
  if (units_.empty()) return Box(Point(0, 0), Point(0, 0));
  Box b = units_.front().envelope();
  for (const auto& u : units_) bg::expand(b, u.envelope());
  return b;
}

void ArealSupport::validate_partition(double rel_tol) const {
  const BoxTree tree = build_tree(*this);
  for (std::size_t i = 0; i < units_.size(); ++i) {
    std::vector<IndexedBox> hits;
    tree.query(bgi::intersects(units_[i].envelope()), std::back_inserter(hits));
    for (const auto& [box, j] : hits) {
      if (j <= i) continue;
      const double overlap = intersection_area(units_[i], units_[j]);
      const double bound = rel_tol * std::min(units_[i].area(), units_[j].area());
      if (overlap >= bound) {
        throw GeometryError("units '" + units_[i].id() + "' and '" + units_[j].id() + "' overlap");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Overlaps

double intersection_area(const ArealUnit& a, const ArealUnit& b) {
  if (!bg::intersects(a.envelope(), b.envelope())) return 0.0;
  MultiPolygon out;
  try {
    bg::intersection(a.shape(), b.shape(), out);
  } catch (const bg::exception& e) {
    throw GeometryError("clipping '" + a.id() + "' against '" + b.id() + "' failed: " + e.what());
  }
  if (out.empty()) return 0.0;
  bg::validity_failure_type failure;
  if (!bg::is_valid(out, failure) && failure == bg::failure_self_intersections) {
    throw GeometryError("clipping '" + a.id() + "' against '" + b.id() + "' produced a self-intersecting result");
  }
  const double area = bg::area(out);
  const double cap = std::min(a.area(), b.area());
  if (!(area >= -1e-12 * cap) || area > cap * (1.0 + 1e-9)) {
    throw GeometryError("clipping '" + a.id() + "' against '" + b.id() + "' produced an out-of-range area");
  }
  return std::clamp(area, 0.0, cap);
}

double raster_intersection_area(const ArealUnit& a, const ArealUnit& b, double cell_size) {
  if (!(cell_size > 0.0)) throw GeometryError("raster cell size must be positive");
  Box common;
  if (!bg::intersection(a.envelope(), b.envelope(), common)) return 0.0;
  const double x0 = common.min_corner().x();
  const double y0 = common.min_corner().y();
  const auto nx = static_cast<std::size_t>(std::ceil((common.max_corner().x() - x0) / cell_size));
  const auto ny = static_cast<std::size_t>(std::ceil((common.max_corner().y() - y0) / cell_size));
  std::size_t hits = 0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double y = y0 + (static_cast<double>(iy) + 0.5) * cell_size;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = x0 + (static_cast<double>(ix) + 0.5) * cell_size;
      if (a.covers(x, y) && b.covers(x, y)) ++hits;
    }
  }
  return static_cast<double>(hits) * cell_size * cell_size;
}

double overlap_fraction(const ArealUnit& a, const ArealUnit& b) {
  return intersection_area(a, b) / a.area();
}

// ---------------------------------------------------------------------------
// Change-of-support weights

std::vector<CosWeights> CosWeightMatrix::as_list() const {
  std::vector<CosWeights> out;
  out.reserve(rows());
  const Eigen::MatrixXd dense(H);
  for (std::size_t m = 0; m < rows(); ++m) {
    out.push_back({target_ids[m], dense.row(static_cast<Eigen::Index>(m)).transpose()});
  }
  return out;
}

CosWeightMatrix cos_weights(const ArealSupport& source, const ArealSupport& target, const ClipOptions& options) {
  CosWeightMatrix result;
  result.target_ids = target.ids();
  result.source_ids = source.ids();
  result.source_checksum = source.checksum();
  result.gap_fraction.assign(target.size(), 0.0);

  const BoxTree tree = build_tree(source);
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<IndexedBox> hits;
  for (std::size_t m = 0; m < target.size(); ++m) {
    const ArealUnit& b = target.unit(m);
    hits.clear();
    tree.query(bgi::intersects(b.envelope()), std::back_inserter(hits));
    std::sort(hits.begin(), hits.end(), [](const auto& l, const auto& r) { return l.second < r.second; });
    double covered = 0.0;
    for (const auto& [box, i] : hits) {
      const ArealUnit& a = source.unit(i);
      double area;
      try {
        area = intersection_area(b, a);
      } catch (const GeometryError&) {
        if (!options.raster_cell_size) throw;
        area = raster_intersection_area(b, a, *options.raster_cell_size);
        ++result.raster_fallbacks;
      }
      double w = area / a.area();
      if (w < options.sliver_tolerance) continue;
      if (w > 1.0 && w <= 1.0 + 1e-9) w = 1.0;
      covered += area;
      triplets.emplace_back(static_cast<int>(m), static_cast<int>(i), w);
    }
    const double gap = 1.0 - covered / b.area();
    result.gap_fraction[m] = gap;
    if (gap > options.gap_tolerance) result.uncovered.push_back(m);
  }
  result.H.resize(static_cast<Eigen::Index>(target.size()), static_cast<Eigen::Index>(source.size()));
  result.H.setFromTriplets(triplets.begin(), triplets.end());
  result.H.makeCompressed();
  return result;
}

CosWeightMatrix identity_weights(const ArealSupport& source) {
  CosWeightMatrix result;
  result.target_ids = source.ids();
  result.source_ids = source.ids();
  result.source_checksum = source.checksum();
  result.gap_fraction.assign(source.size(), 0.0);
  const auto n = static_cast<Eigen::Index>(source.size());
  result.H.resize(n, n);
  result.H.setIdentity();
  result.H.makeCompressed();
  return result;
}

// ---------------------------------------------------------------------------
// Adjacency

Eigen::MatrixXd adjacency_from_boundaries(const ArealSupport& support, EdgeRule rule,
                                          std::vector<std::size_t>* isolated) {
  const auto n = support.size();
  Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double tol = 1e-9 * std::max(box_extent(support.bounds()), 1e-300);
  const BoxTree tree = build_tree(support);
  std::vector<IndexedBox> hits;
  for (std::size_t i = 0; i < n; ++i) {
    const ArealUnit& a = support.unit(i);
    hits.clear();
    tree.query(bgi::intersects(expand(a.envelope(), tol)), std::back_inserter(hits));
    for (const auto& [box, j] : hits) {
      if (j <= i) continue;
      const ArealUnit& b = support.unit(j);
      bool linked;
      if (rule == EdgeRule::Queen) {
        linked = bg::distance(a.shape(), b.shape()) <= tol;
      } else {
        linked = shared_boundary_length(a, b, tol) > 1e3 * tol;
      }
      if (linked) {
        adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
      }
    }
  }
  if (isolated) {
    isolated->clear();
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
      if (adjacency.row(i).sum() == 0.0) isolated->push_back(static_cast<std::size_t>(i));
    }
  }
  return adjacency;
}

// ---------------------------------------------------------------------------
// Tilings

ArealSupport rect_tiling(double x0, double y0, double x1, double y1, std::size_t nx, std::size_t ny,
                         const std::string& prefix, int level) {
  if (nx == 0 || ny == 0 || !(x1 > x0) || !(y1 > y0)) throw GeometryError("invalid tiling request");
  std::vector<double> xs(nx + 1), ys(ny + 1);
  for (std::size_t k = 0; k <= nx; ++k) xs[k] = x0 + (x1 - x0) * static_cast<double>(k) / static_cast<double>(nx);
  for (std::size_t k = 0; k <= ny; ++k) ys[k] = y0 + (y1 - y0) * static_cast<double>(k) / static_cast<double>(ny);
  xs.back() = x1;
  ys.back() = y1;
  return rect_tiling(xs, ys, prefix, level);
}

ArealSupport rect_tiling(const std::vector<double>& xbreaks, const std::vector<double>& ybreaks,
                         const std::string& prefix, int level) {
  if (xbreaks.size() < 2 || ybreaks.size() < 2) throw GeometryError("tiling needs at least two breaks per axis");
  if (!std::is_sorted(xbreaks.begin(), xbreaks.end()) || !std::is_sorted(ybreaks.begin(), ybreaks.end())) {
    throw GeometryError("tiling breaks must be increasing");
  }
  std::vector<ArealUnit> units;
  std::size_t k = 0;
  for (std::size_t iy = 0; iy + 1 < ybreaks.size(); ++iy) {
    for (std::size_t ix = 0; ix + 1 < xbreaks.size(); ++ix) {
      units.push_back(ArealUnit::rectangle(prefix + std::to_string(k++), xbreaks[ix], ybreaks[iy],
                                           xbreaks[ix + 1], ybreaks[iy + 1]));
    }
  }
  return ArealSupport(std::move(units), level);
}

}  // namespace countcos::geometry
