#pragma once

#include <cstdint>
#include <random>

namespace bbcal {

// splitmix64: seed expansion and derivation of independent substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic substream seed from (master, a, b). Used for replication
// and chain streams so output is independent of thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = master;
  std::uint64_t x = splitmix64(s);
  s ^= a * 0xd1342543de82ef95ULL;
  x ^= splitmix64(s);
  s ^= b * 0xaf251af3b0f025b5ULL;
  x ^= splitmix64(s);
  return x ? x : 0x1ULL;
}

double normal_quantile(double p);  // stats.cpp (Wichura AS241)

// Explicit-state RNG. normal() uses the inverse-CDF transform so streams are
// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return gen_(); }

  // uniform on (0,1), never returning an endpoint
  double uniform() {
    const std::uint64_t u = gen_();
    return static_cast<double>(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double normal() { return normal_quantile(uniform()); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return n ? gen_() % n : 0;
  }

  Rng substream(std::uint64_t id) const { return Rng(derive_seed(seed_, id)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace bbcal
