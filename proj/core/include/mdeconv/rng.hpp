#pragma once

#include <cstdint>
#include <initializer_list>

namespace mdeconv {

//! SplitMix64 output function; a bijective 64-bit mixer.
constexpr std::uint64_t
mix64(std::uint64_t z) noexcept
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Folds a list of words into one stream key.
std::uint64_t stream_key(std::initializer_list<std::uint64_t> words) noexcept;

//! Counter-based generator: draw k of stream `key` is mix64(key ^ k*c),
//! so any draw of any stream can be reproduced without replaying the others.
class CounterRng
{
public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
    : key_(mix64(key))
    , counter_(counter)
  {}

  std::uint64_t next_u64() noexcept
  {
    return mix64(key_ ^ (0xd1b54a32d192ed03ULL * ++counter_));
  }

  //! Uniform on the open interval (0, 1).
  double uniform() noexcept
  {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double standard_normal() noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

} // namespace mdeconv
