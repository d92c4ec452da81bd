#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace isac {

/// SplitMix64 finalizer; used to decorrelate derived stream ids.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child stream id of `parent` addressed by a path of counters. The result
/// depends only on the inputs, never on the order work is executed in.
constexpr std::uint64_t derive_stream(std::uint64_t parent,
                                      std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(parent);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t stream) { return Engine(mix64(stream)); }

// Labels that keep the per-purpose substreams of one trial apart.
namespace stream_tag {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kDevices = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kSymbols = 4;
inline constexpr std::uint64_t kAllocation = 5;
}  // namespace stream_tag

}  // namespace isac
