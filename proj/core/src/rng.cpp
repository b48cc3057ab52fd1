#include "oscar/core/rng.hpp"

#include <cmath>

namespace oscar {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2) + b;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t s = mix64(base, 0x6f736361ULL);
  for (auto id : ids) s = mix64(s, id);
  return s;
}

double Rng::uniform_open() {
  double u = uniform();
  while (u <= 0.0) u = uniform();
  return u;
}

double Rng::gumbel() { return -std::log(-std::log(uniform_open())); }

}  // namespace oscar
