#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace trapcal {

// Philox4x32-10 keyed counter permutation (Salmon et al., SC'11).
// Pure function of (counter, key); all randomness in the toolkit is derived
// from it so that results are reproducible bit-for-bit across platforms and
// thread counts.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

// FNV-1a, used to fold scenario names into stream identifiers and to digest
// output files.
std::uint32_t fnv1a32(std::string_view s);
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(std::string_view s);

// One independent random stream. Streams are addressed by
// (master seed, scenario id, stream index); draws within a stream advance a
// 64-bit block counter. Two streams with different addresses never collide.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view scenario_id, std::uint64_t stream_index);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Standard normal via Box-Muller (explicit formula, no library distributions).
  double normal();

  // Binomial(n, p) as n Bernoulli draws; exact and platform independent.
  long binomial(long n, double p);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;  // scenario hash, stream index low
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace trapcal
