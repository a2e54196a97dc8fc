#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "countcos/geometry.hpp"

namespace countcos::geometry {

/// Parses a FeatureCollection of Polygon / MultiPolygon features. Each
/// feature needs an "id" property (string or integer).
[[nodiscard]] ArealSupport parse_geojson(const std::string& text, int level = 1);
[[nodiscard]] ArealSupport read_geojson(const std::filesystem::path& path, int level = 1);

/// Numeric properties attached to each feature on output, keyed by name.
/// Every vector must have support.size() entries.
using FeatureProperties = std::map<std::string, std::vector<double>>;

[[nodiscard]] std::string to_geojson(const ArealSupport& support, const FeatureProperties& properties = {});
void write_geojson(const std::filesystem::path& path, const ArealSupport& support,
                   const FeatureProperties& properties = {});

/// Rows = target ids, columns = source ids, dense.
void write_weights_csv(std::ostream& out, const CosWeightMatrix& weights);

}  // namespace countcos::geometry
