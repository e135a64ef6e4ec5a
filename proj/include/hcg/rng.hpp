#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace hcg {

/// splitmix64 finalizer. Used both as a seeding hash and to derive
/// independent stream keys from (seed, job) counters.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// A reproducible random stream (xoshiro256** core).
///
/// Streams are never seeded from each other's output: a job's stream is a
/// pure function of (seed, job index, sub-stream), so replicate batches give
/// the same results no matter how they are scheduled across threads.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed, std::uint64_t job = 0, std::uint64_t sub = 0) noexcept {
    std::uint64_t key = mix64(seed ^ mix64(job * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    key = mix64(key ^ mix64(sub + 0x632BE59BD9B4E019ULL));
    for (std::size_t i = 0; i < state_.size(); ++i) {
      state_[i] = mix64(key + 0x9E3779B97F4A7C15ULL * (i + 1));
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  /// Child stream for a numbered sub-task of this stream's owner.
  [[nodiscard]] Stream split(std::uint64_t child) const noexcept {
    return Stream(state_[0] ^ mix64(state_[3]), child, 0x5EED);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform integer in [0, 2^bits), bits <= 64.
  std::uint64_t bits(int nbits) noexcept {
    if (nbits <= 0) return 0;
    return nbits >= 64 ? next() : next() >> (64 - nbits);
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0,1].
  double uniform_pos() noexcept { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  /// Unbiased integer in [0, n) (Lemire's multiply-shift rejection).
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Geometric on {1,2,...} with success probability p.
  int geometric(double p) noexcept {
    if (p >= 1.0) return 1;
    const double u = uniform_pos();
    return 1 + static_cast<int>(std::floor(std::log(u) / std::log1p(-p)));
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace hcg
