#pragma once

#include <cstdint>
#include <random>

namespace denscoint {

/// Seed plus stream index. Engines are std::mt19937_64 initialized through
/// std::seed_seq from (version, seed, stream, substream), so any
/// (seed, stream, substream) triple reproduces the same draws on one build.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Bumped whenever the stream derivation changes.
inline constexpr std::uint32_t kRngVersion = 1;

inline std::mt19937_64 make_engine(RngSeed seed, std::uint64_t substream = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{kRngVersion, lo(seed.seed), hi(seed.seed), lo(seed.stream),
                    hi(seed.stream), lo(substream), hi(substream)};
  return std::mt19937_64(seq);
}

/// Child seed for a nested family of streams, e.g. replication r of a study.
inline RngSeed derive(RngSeed parent, std::uint64_t child) {
  std::mt19937_64 eng = make_engine(parent, child ^ 0x9e3779b97f4a7c15ull);
  return RngSeed{eng(), eng()};
}

}  // namespace denscoint
