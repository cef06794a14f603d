#pragma once

#include <cmath>
#include <cstdint>

namespace maxplus {

namespace detail {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// splitmix64 stream with hash-keyed derivation. Streams keyed by
/// (master seed, replica, substream) are independent for all practical
/// purposes and cost nothing to seek to, which is what makes replica-indexed
/// parallel simulation deterministic regardless of the thread count.
class Stream {
  public:
    explicit Stream(uint64_t seed) : state_(seed) {}

    static Stream keyed(uint64_t master, uint64_t k1, uint64_t k2 = 0) {
        uint64_t s = master;
        s = detail::mix64(s + detail::kGolden * (k1 + 1));
        s = detail::mix64(s + detail::kGolden * (k2 + 1));
        return Stream(s);
    }

    uint64_t next_u64() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    /// Uniform on the open interval (0,1); never returns 0 or 1.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(next_unit()) / rate; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  private:
    uint64_t state_;
};

}  // namespace maxplus
