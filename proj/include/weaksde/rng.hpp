#pragma once

#include <array>
#include <cstdint>

namespace weaksde {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
/// Stateless: the output is a pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

/// Independent master seed for sub-run `index` (one per scheme, variant, ...) of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Location of a random stream: (master_seed, stream_index) fix the stream,
/// step_counter is the Philox block position inside it.
struct SeedPath {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  std::uint64_t step_counter = 0;
};

/// Counter-based stream. One per trajectory / chain / block; never shared between threads.
/// The draw sequence depends only on (master_seed, stream_index).
class Stream {
 public:
  Stream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;
  explicit Stream(const SeedPath& path) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal (Box-Muller, second variate cached).
  double normal() noexcept;

  SeedPath position() const noexcept { return {master_seed_, stream_index_, block_}; }

 private:
  void refill() noexcept;

  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int available_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace weaksde
