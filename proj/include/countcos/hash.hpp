#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace countcos {

/// Incremental 64-bit FNV-1a. Used for geometry checksums, config
/// fingerprints and store section checksums; not cryptographic.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) noexcept;
  void update(std::string_view s) noexcept;
  void update(double v) noexcept;
  void update(std::uint64_t v) noexcept;
  void update(std::span<const double> v) noexcept;

  [[nodiscard]] std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

[[nodiscard]] std::uint64_t fnv1a(const void* data, std::size_t n) noexcept;

}  // namespace countcos
