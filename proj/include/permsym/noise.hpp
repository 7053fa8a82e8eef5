#ifndef PERMSYM_NOISE_HPP
#define PERMSYM_NOISE_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace permsym {

/// Seeded deterministic uniform-[0,1) stream with index-addressable substreams.
///
/// The underlying generator is splitmix64 advanced once per draw; uniforms are
/// the top 53 bits of the output, so identical (seed, stream, cursor) yields
/// identical values on any platform. Sources are immutable values: drawing
/// returns a new source rather than mutating in place, and forking depends
/// only on (seed, stream), never on the cursor.
struct NoiseSource {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t cursor = 0;
};

/// splitmix64 output scramble.
std::uint64_t splitmix64(std::uint64_t z);

/// One uniform draw in [0,1) and the advanced source.
std::pair<double, NoiseSource> noise_next(NoiseSource src);

/// Substream keyed by a multi-index. Order-independent with respect to draws
/// already taken from `src`; injective over desk-scale index grids.
NoiseSource noise_fork(const NoiseSource& src,
                       std::span<const std::uint64_t> index);
NoiseSource noise_fork(const NoiseSource& src,
                       std::initializer_list<std::uint64_t> index);

/// Bounds-checked fork; throws std::out_of_range when index[k] >= bounds[k].
NoiseSource noise_fork(const NoiseSource& src,
                       std::span<const std::uint64_t> index,
                       std::span<const std::uint64_t> bounds);

/// Convenience: n draws from a source copy (the original is untouched).
std::vector<double> noise_draw(NoiseSource src, std::size_t n);

/// Uniform integer in {0, ..., bound-1} plus the advanced source.
std::pair<std::uint64_t, NoiseSource> noise_below(NoiseSource src,
                                                  std::uint64_t bound);

}  // namespace permsym

#endif
