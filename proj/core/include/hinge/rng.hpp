#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace hinge {

// Counter-based splittable generator (splitmix64 core). Streams are derived by
// hashing a key tuple, so sampling for one anchor never depends on how many
// draws another anchor consumed. That makes per-epoch resampling deterministic
// under any batch order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ kGolden) {}

  static uint64_t mix(uint64_t h, uint64_t v) {
    v *= 0x9e3779b97f4a7c15ULL;
    v = (v << 31) | (v >> 33);
    v *= 0xbf58476d1ce4e5b9ULL;
    return (h ^ v) * 0x94d049bb133111ebULL;
  }

  // Derives an independent stream from a key tuple, e.g.
  // Rng::keyed({seed, type, index, metapath_id, epoch}).
  static Rng keyed(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x8a5cd789635d2dffULL;
    for (uint64_t p : parts) h = mix(h, p);
    return Rng(h);
  }

  uint64_t next_u64() {
    uint64_t z = (state_ += kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Fixed-point multiply keeps the map bias below 2^-32 for
  // any neighborhood size we can hold in memory.
  uint32_t next_index(uint32_t n) {
    return static_cast<uint32_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Uniform in [0, 1).
  float next_float() { return static_cast<float>(next_u64() >> 40) * 0x1p-24f; }

  // Uniform in [-a, a].
  float next_symmetric(float a = 1.0f) { return (2.0f * next_float() - 1.0f) * a; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_index(static_cast<uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  uint64_t state_;
};

}  // namespace hinge
