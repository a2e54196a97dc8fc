#pragma once

/// @file store.hpp
/// @brief Binary persistence of posterior draws and the model they came from.
///
/// Layout (little-endian):
///   header   "CCOSDRAW" | u32 version | u64 timestamp | u64 config fingerprint |
///            u64 geometry checksum | u64 n1 | u64 r | u64 p | u64 K
///   sections tag[4] | u64 length | payload | u64 FNV-1a of payload
/// Sections: GEOM (level-1 GeoJSON), MODL (kind, hyperparameters), BASS
/// (covariates and basis), DATA (every support level), DRAW (states),
/// MU1_ (K x n1 means), ACPT (acceptance ledger, warnings).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "countcos/basis.hpp"
#include "countcos/geometry.hpp"
#include "countcos/inference.hpp"
#include "countcos/model.hpp"
#include "countcos/sampler.hpp"

namespace countcos::store {

inline constexpr std::uint32_t kStoreVersion = 1;

struct StoreHeader {
  std::uint32_t version = kStoreVersion;
  std::uint64_t timestamp = 0;
  std::uint64_t config_fingerprint = 0;
  std::uint64_t geometry_checksum = 0;
  std::uint64_t n1 = 0;
  std::uint64_t r = 0;
  std::uint64_t p = 0;
  std::uint64_t K = 0;
};

struct DrawStore {
  StoreHeader header;
  geometry::ArealSupport source;
  model::ModelKind kind = model::ModelKind::CS;
  model::Hyperparameters hyper;
  basis::CovariateMatrix covariates;
  basis::MoranBasis basis;
  std::vector<model::SupportData> levels;
  sampler::PosteriorDraws draws;

  [[nodiscard]] model::SurveyDataset dataset() const;
};

/// Writes atomically (temporary file, then rename). The header timestamp
/// is taken from `timestamp` (seconds since the epoch).
void write_store(const std::filesystem::path& path, const DrawStore& store, std::uint64_t timestamp);

/// Full read with checksum verification. Throws DataError on corruption.
[[nodiscard]] DrawStore read_store(const std::filesystem::path& path);

[[nodiscard]] StoreHeader read_header(const std::filesystem::path& path);

/// What a COS query needs: the level-1 support and the K x n1 means.
struct CosView {
  StoreHeader header;
  geometry::ArealSupport source;
  inference::DrawMatrix mu1;
};

/// Reads only the GEOM and MU1_ sections.
[[nodiscard]] CosView read_cos_view(const std::filesystem::path& path);

/// draw,chain,<monitored scalars...>
void write_trace_csv(std::ostream& out, const sampler::PosteriorDraws& draws, bool gap);

}  // namespace countcos::store
