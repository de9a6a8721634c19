#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace curvssl {

// What a random stream is used for; part of the stream key so unrelated
// consumers never share draws.
enum class StreamPurpose : std::uint64_t {
  Init = 1,
  Shuffle = 2,
  Augment = 3,
  Synthetic = 4,
  Probe = 5,
  Test = 6,
};

// Derives an independent generator from (root seed, purpose, counters...).
// Counters are e.g. (epoch, batch, sample, view). The key is hashed with
// SplitMix64 so neighbouring counters give unrelated streams, and the result
// never depends on the order in which streams are created.
std::mt19937_64 make_stream(std::uint64_t root_seed, StreamPurpose purpose,
                            std::initializer_list<std::uint64_t> counters = {});

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace curvssl
