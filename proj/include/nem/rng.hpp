#pragma once

#include <cstdint>
#include <random>

namespace nem {

// 64-bit seeded generator with deterministic child streams. Children derived
// with split() are independent of how many numbers the parent has drawn.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::uint64_t stream) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return Rng((static_cast<std::uint64_t>(out[1]) << 32) | out[0]);
  }

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // +1 or -1 with equal probability.
  int rademacher() { return (engine_() >> 63) ? 1 : -1; }

  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Stream ids used by the pipeline, kept here so every stage draws from a fixed substream.
namespace streams {
inline constexpr std::uint64_t kVqe = 1;
inline constexpr std::uint64_t kDataset = 2;
inline constexpr std::uint64_t kNqsInit = 3;
inline constexpr std::uint64_t kNqst = 4;
inline constexpr std::uint64_t kVmc = 5;
inline constexpr std::uint64_t kExact = 6;
inline constexpr std::uint64_t kMetrics = 7;
}  // namespace streams

}  // namespace nem
