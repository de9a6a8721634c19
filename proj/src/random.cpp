#include "curvssl/random.hpp"

namespace curvssl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_stream(std::uint64_t root_seed, StreamPurpose purpose,
                            std::initializer_list<std::uint64_t> counters) {
  std::uint64_t key = splitmix64(root_seed);
  key = splitmix64(key ^ static_cast<std::uint64_t>(purpose));
  for (std::uint64_t c : counters) key = splitmix64(key ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace curvssl
