#include "permsym/noise.hpp"

#include <stdexcept>

namespace permsym {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kForkTag = 0xA3EC647659359ACDULL;

std::uint64_t base_state(const NoiseSource& src) {
  return splitmix64(splitmix64(src.seed) ^ splitmix64(src.stream ^ kGolden));
}
}  // namespace

std::uint64_t splitmix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::pair<double, NoiseSource> noise_next(NoiseSource src) {
  std::uint64_t word = splitmix64(base_state(src) + src.cursor * kGolden);
  double value = static_cast<double>(word >> 11) * 0x1.0p-53;
  src.cursor += 1;
  return {value, src};
}

NoiseSource noise_fork(const NoiseSource& src,
                       std::span<const std::uint64_t> index) {
  std::uint64_t h = splitmix64(src.stream ^ kForkTag);
  h = splitmix64(h ^ static_cast<std::uint64_t>(index.size()));
  for (std::uint64_t c : index) h = splitmix64(h ^ (c + kGolden));
  return NoiseSource{src.seed, h, 0};
}

NoiseSource noise_fork(const NoiseSource& src,
                       std::initializer_list<std::uint64_t> index) {
  return noise_fork(src, std::span<const std::uint64_t>(index.begin(), index.size()));
}

NoiseSource noise_fork(const NoiseSource& src,
                       std::span<const std::uint64_t> index,
                       std::span<const std::uint64_t> bounds) {
  if (index.size() != bounds.size())
    throw std::out_of_range("noise_fork: index/bounds rank mismatch");
  for (std::size_t k = 0; k < index.size(); ++k)
    if (index[k] >= bounds[k])
      throw std::out_of_range("noise_fork: index out of bounds");
  return noise_fork(src, index);
}

std::vector<double> noise_draw(NoiseSource src, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [v, next] = noise_next(src);
    out.push_back(v);
    src = next;
  }
  return out;
}

std::pair<std::uint64_t, NoiseSource> noise_below(NoiseSource src,
                                                  std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("noise_below: zero bound");
  auto [u, next] = noise_next(src);
  auto v = static_cast<std::uint64_t>(u * static_cast<double>(bound));
  if (v >= bound) v = bound - 1;
  return {v, next};
}

}  // namespace permsym
