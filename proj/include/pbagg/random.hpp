#pragma once

// Seed derivation and uniform draws on (0,1].

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace pbagg {

// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent child seed number `stream` of `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Maps 64 random bits onto the grid {1, 2, ..., 2^53} / 2^53, so the result
// lies in (0,1] and 1/u is always finite.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Source of the per-key randomizers u and gate draws r.
//
// Three flavours share one type so aggregators stay non-templated:
//  - seeded: mt19937_64 stream,
//  - pinned: replays a fixed sequence (tests and oracle comparisons),
//  - hashed: u = hash(key, seed, admission nonce), recomputable from the key.
class UniformSource {
 public:
  enum class Kind { seeded, pinned, hashed };

  static UniformSource seeded(std::uint64_t seed);
  static UniformSource pinned(std::vector<double> values);
  static UniformSource hashed(std::uint64_t seed);

  // Next draw in (0,1]. `key` only matters for the hashed flavour.
  double draw(std::uint64_t key = 0) {
    ++draws_;
    switch (kind_) {
      case Kind::seeded:
        return to_unit(engine_());
      case Kind::pinned:
        return next_pinned();
      case Kind::hashed:
        return to_unit(mix64(mix64(key ^ seed_) + draws_));
    }
    return 1.0;
  }

  // Standard exponential variate, -log(u).
  double exponential(std::uint64_t key = 0);

  Kind kind() const noexcept { return kind_; }
  std::uint64_t draws() const noexcept { return draws_; }

 private:
  UniformSource() = default;
  double next_pinned();

  Kind kind_ = Kind::seeded;
  std::uint64_t seed_ = 0;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  std::vector<double> pinned_;
  std::size_t cursor_ = 0;
};

}  // namespace pbagg
