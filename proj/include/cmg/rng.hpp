#ifndef CMG_RNG_HPP
#define CMG_RNG_HPP

#include <cstdint>
#include <span>
#include <stdexcept>

namespace cmg {

// Deterministic, platform-independent random stream (xoshiro256++ seeded via
// splitmix64).  Every stochastic component in the library draws from one of
// these so that a (config, seed) pair replays bit-for-bit on any machine;
// nothing here depends on std::mt19937 or libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<int>(wide >> 64);
  }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Sample an index from a probability vector by inverse-CDF walk.  Entries
  // must be non-negative and sum to ~1; any rounding residue falls on the last
  // index with positive mass, so zero-mass entries are never selected.
  int categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("Rng::categorical: empty distribution");
    const double u = next_double();
    double cumulative = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double p = probs[i];
      if (p < 0.0) throw std::invalid_argument("Rng::categorical: negative probability");
      if (p > 0.0) last_positive = static_cast<int>(i);
      cumulative += p;
      if (u < cumulative && p > 0.0) return static_cast<int>(i);
    }
    if (last_positive < 0) throw std::invalid_argument("Rng::categorical: all-zero distribution");
    return last_positive;
  }

  // Derive an independent stream for a sub-task (e.g. one sweep cell).  Same
  // parent seed + same key => same child stream.
  Rng fork(std::uint64_t key) const {
    std::uint64_t x = state_[0] ^ (key + 0x9e3779b97f4a7c15ULL);
    return Rng(splitmix64(x));
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

}  // namespace cmg

#endif  // CMG_RNG_HPP
