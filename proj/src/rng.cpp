#include "erw/rng.hpp"

namespace erw {

Xoshiro256pp make_stream(std::uint64_t master_seed, std::uint64_t index, StreamPurpose purpose) {
  const Philox4x32::Key key = {static_cast<std::uint32_t>(master_seed),
                               static_cast<std::uint32_t>(master_seed >> 32)};
  const auto lo = static_cast<std::uint32_t>(index);
  const auto hi = static_cast<std::uint32_t>(index >> 32);
  const auto tag = static_cast<std::uint32_t>(purpose);
  const auto first = Philox4x32::block({lo, hi, tag, 0u}, key);
  const auto second = Philox4x32::block({lo, hi, tag, 1u}, key);
  auto join = [](std::uint32_t a, std::uint32_t b) {
    return (std::uint64_t{b} << 32) | std::uint64_t{a};
  };
  Xoshiro256pp::State state = {join(first[0], first[1]), join(first[2], first[3]),
                               join(second[0], second[1]), join(second[2], second[3])};
  if ((state[0] | state[1] | state[2] | state[3]) == 0) state[0] = 0x9E3779B97F4A7C15ull;
  return Xoshiro256pp(state);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt) {
  auto rng = make_stream(master_seed, salt, StreamPurpose::Statistics);
  return rng();
}

}  // namespace erw
