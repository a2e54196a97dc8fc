#include "countcos/geojson.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace countcos::geometry {

using nlohmann::json;

namespace {

Ring parse_ring(const json& coords) {
  Ring ring;
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2) throw DataError("GeoJSON: malformed coordinate");
    ring.emplace_back(c[0].get<double>(), c[1].get<double>());
  }
  return ring;
}

Polygon parse_polygon(const json& rings) {
  if (!rings.is_array() || rings.empty()) throw DataError("GeoJSON: polygon without rings");
  Polygon poly;
  poly.outer() = parse_ring(rings[0]);
  for (std::size_t k = 1; k < rings.size(); ++k) poly.inners().push_back(parse_ring(rings[k]));
  return poly;
}

std::string feature_id(const json& feature, std::size_t index) {
  const json* id = nullptr;
  if (feature.contains("properties") && feature["properties"].is_object() && feature["properties"].contains("id")) {
    id = &feature["properties"]["id"];
  }
  if (!id) throw DataError("GeoJSON: feature " + std::to_string(index) + " has no \"id\" property");
  if (id->is_string()) return id->get<std::string>();
  if (id->is_number_integer()) return std::to_string(id->get<long long>());
  throw DataError("GeoJSON: feature " + std::to_string(index) + " has a non-string, non-integer id");
}

json ring_json(const Ring& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x(), p.y()});
  return out;
}

}  // namespace

ArealSupport parse_geojson(const std::string& text, int level) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("GeoJSON: ") + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
    throw DataError("GeoJSON: expected a FeatureCollection");
  }
  std::vector<ArealUnit> units;
  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const auto id = feature_id(feature, index);
    const auto& geom = feature.at("geometry");
    const auto type = geom.value("type", "");
    MultiPolygon shape;
    if (type == "Polygon") {
      shape.push_back(parse_polygon(geom.at("coordinates")));
    } else if (type == "MultiPolygon") {
      for (const auto& p : geom.at("coordinates")) shape.push_back(parse_polygon(p));
    } else {
      throw DataError("GeoJSON: feature '" + id + "' has unsupported geometry type '" + type + "'");
    }
    units.emplace_back(id, std::move(shape));
    ++index;
  }
  return ArealSupport(std::move(units), level);
}

ArealSupport read_geojson(const std::filesystem::path& path, int level) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_geojson(buf.str(), level);
}

std::string to_geojson(const ArealSupport& support, const FeatureProperties& properties) {
  for (const auto& [name, values] : properties) {
    if (values.size() != support.size()) throw DataError("property '" + name + "' has the wrong length");
  }
  json features = json::array();
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto& unit = support.unit(i);
    json coords = json::array();
    for (const auto& poly : unit.shape()) {
      json rings = json::array();
      rings.push_back(ring_json(poly.outer()));
      for (const auto& hole : poly.inners()) rings.push_back(ring_json(hole));
      coords.push_back(std::move(rings));
    }
    json props = {{"id", unit.id()}};
    for (const auto& [name, values] : properties) props[name] = values[i];
    features.push_back({{"type", "Feature"},
                        {"properties", std::move(props)},
                        {"geometry", {{"type", "MultiPolygon"}, {"coordinates", std::move(coords)}}}});
  }
  json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(1);
}

void write_geojson(const std::filesystem::path& path, const ArealSupport& support,
                   const FeatureProperties& properties) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_geojson(support, properties) << '\n';
}

void write_weights_csv(std::ostream& out, const CosWeightMatrix& weights) {
  out << "target_id";
  for (const auto& id : weights.source_ids) out << ',' << id;
  out << '\n';
  const Eigen::MatrixXd dense(weights.H);
  out << std::setprecision(17);
  for (std::size_t m = 0; m < weights.rows(); ++m) {
    out << weights.target_ids[m];
    for (Eigen::Index i = 0; i < dense.cols(); ++i) out << ',' << dense(static_cast<Eigen::Index>(m), i);
    out << '\n';
  }
}

}  // namespace countcos::geometry
