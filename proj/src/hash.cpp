#include "countcos/hash.hpp"

#include <bit>
#include <cstring>

namespace countcos {

void Fnv1a::update(const void* data, std::size_t n) noexcept {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update(std::string_view s) noexcept {
  update(static_cast<std::uint64_t>(s.size()));
  update(s.data(), s.size());
}

void Fnv1a::update(double v) noexcept {
  // -0.0 and 0.0 hash identically
  if (v == 0.0) v = 0.0;
  update(std::bit_cast<std::uint64_t>(v));
}

void Fnv1a::update(std::uint64_t v) noexcept {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  update(buf, 8);
}

void Fnv1a::update(std::span<const double> v) noexcept {
  for (double x : v) update(x);
}

std::uint64_t fnv1a(const void* data, std::size_t n) noexcept {
  Fnv1a h;
  h.update(data, n);
  return h.digest();
}

}  // namespace countcos
