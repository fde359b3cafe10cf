#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace dcsrd {

// splitmix64 step; used to whiten and combine seed words.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based seed derivation: mix(master, a, b) is stable across platforms
// and lets trials draw from independent streams in any order.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s ^= a * 0xd6e8feb86659fd93ULL;
  h ^= splitmix64(s);
  s ^= b * 0xa3b195354a39b70dULL;
  h ^= splitmix64(s);
  return h;
}

// Seeded stream handed to every generator; one instance per Monte-Carlo trial.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian(double stddev) { return normal_(engine_) * stddev; }

  // k distinct indices drawn uniformly from {0..n-1}, returned sorted.
  std::vector<int> sample_indices(int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(pool[i], pool[pick(engine_)]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dcsrd
