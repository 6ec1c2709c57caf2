#pragma once

#include <cstdint>
#include <random>

namespace lnatune {

using RngStream = std::mt19937_64;

/// Independent stream keyed by (master seed, stream id, purpose tag). Streams
/// for different ids do not depend on how many values other streams consumed,
/// so work can be split across threads without changing results.
inline RngStream substream(std::uint64_t master_seed, std::uint64_t stream_id, std::uint32_t tag = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32), tag};
  return RngStream(seq);
}

inline double standard_normal(RngStream& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace lnatune
