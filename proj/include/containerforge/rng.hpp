#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace cforge {

// xoshiro256** seeded through splitmix64. All distributions are implemented
// here so draws are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // [0, 1)
  double uniform();
  // [lo, hi)
  double uniform(double lo, double hi);
  // inclusive [lo, hi]
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(items.size()) - 1))];
  }

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

// Keyed derivation of an independent stream seed. Adding a new stage name never
// changes the seeds of existing stages.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::string_view stage);

inline Rng stream(std::uint64_t master, std::uint64_t index, std::string_view stage) {
  return Rng(derive_seed(master, index, stage));
}

}  // namespace cforge
