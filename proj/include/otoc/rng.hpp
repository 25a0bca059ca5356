#pragma once

#include <array>
#include <cstdint>

namespace otoc {

// Counter-keyed xoshiro256++ stream.  Streams are derived from a
// (master_seed, key...) tuple so that Monte Carlo work units own
// independent, scheduling-invariant random sequences.
class RngStream {
 public:
  static RngStream keyed(std::uint64_t master_seed, std::uint64_t key0,
                         std::uint64_t key1 = 0) {
    RngStream r;
    std::uint64_t x = master_seed;
    x = splitmix(x ^ 0x9e3779b97f4a7c15ULL);
    x = splitmix(x ^ key0);
    x = splitmix(x ^ key1);
    for (auto& s : r.state_) {
      x = splitmix(x);
      s = x;
    }
    // xoshiro must not start from the all-zero state
    if ((r.state_[0] | r.state_[1] | r.state_[2] | r.state_[3]) == 0)
      r.state_[0] = 0x9e3779b97f4a7c15ULL;
    return r;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double strictly inside (0, 1); platform-independent.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace otoc
