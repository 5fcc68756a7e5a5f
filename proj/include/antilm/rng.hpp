#pragma once

// deterministic randomness. every stochastic component draws from its own
// RngStream derived from the master seed, so runs replay bit-for-bit across
// platforms. distributions are implemented by hand on top of mt19937_64
// because the std::*_distribution classes are not pinned by the standard.

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace antilm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // independent substream: mixes the master seed with a stream tag
  static RngStream derive(std::uint64_t master, std::uint64_t tag) {
    std::uint64_t s = master ^ (0x6c62272e07bb0142ull * (tag + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return RngStream(a ^ (b << 1 | b >> 63));
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform double in [0, 1) with 53 random bits
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // uniform integer in [0, bound) via rejection sampling (no modulo bias)
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
    std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // state round-trips through the standard text serialization of mt19937_64
  std::string save_state() const {
    std::ostringstream ss;
    ss << engine_;
    return ss.str();
  }

  void load_state(const std::string& text) {
    std::istringstream ss(text);
    ss >> engine_;
    if (ss.fail()) throw std::runtime_error("corrupt rng state");
  }

  bool operator==(const RngStream& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace antilm
