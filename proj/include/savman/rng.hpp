#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace savman {

// Independent random draws addressed by a key path instead of a shared stream
// position: draw(seed, keys...) never depends on how many other draws were
// made, so editing one part of a scenario leaves every other draw unchanged.
// seed_seq and mt19937_64 are fully specified by the standard, so the
// values are the same on every platform.
class KeyedRng {
 public:
  enum Stream : std::uint64_t { kAdvertLoss = 1, kBidLoss = 2, kStrategy = 3 };

  explicit KeyedRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(std::initializer_list<std::uint64_t> keys) const {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (keys.size() + 1));
    auto push = [&](std::uint64_t v) {
      words.push_back(static_cast<std::uint32_t>(v));
      words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed_);
    for (auto k : keys) push(k);
    std::seed_seq seq(words.begin(), words.end());
    std::mt19937_64 engine(seq);
    return engine();
  }

  /// Uniform in [0, 1).
  double uniform(std::initializer_list<std::uint64_t> keys) const {
    return static_cast<double>(bits(keys) >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi, std::initializer_list<std::uint64_t> keys) const {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const auto offset = static_cast<std::int64_t>(static_cast<double>(span) * uniform(keys));
    return std::min(hi, lo + offset);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace savman
