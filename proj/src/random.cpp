#include "kccsd/random.hpp"

#include "kccsd/errors.hpp"

namespace kccsd {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : key_(seed), engine_(splitmix64(seed)) {}

RandomStream RandomStream::derive(std::string_view label, std::uint64_t index) const {
  std::uint64_t k = splitmix64(key_ ^ splitmix64(fnv1a(label)));
  k = splitmix64(k + splitmix64(index ^ 0x5851f42d4c957f2dULL));
  return RandomStream(k);
}

double RandomStream::normal() { return normal_(engine_); }

double RandomStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

int RandomStream::sign() { return (engine_() >> 63) != 0 ? 1 : -1; }

Vector standard_normal(Eigen::Index d, RandomStream& stream) {
  Vector out(d);
  for (Eigen::Index i = 0; i < d; ++i) out[i] = stream.normal();
  return out;
}

std::vector<int> rademacher(std::size_t n, RandomStream& stream) {
  detail::require(n >= 1, "rademacher: n must be at least 1");
  std::vector<int> out(n);
  for (auto& s : out) s = stream.sign();
  return out;
}

}  // namespace kccsd
