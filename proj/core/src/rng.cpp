#include "mdeconv/rng.hpp"

#include <cmath>
#include <numbers>

namespace mdeconv {

std::uint64_t
stream_key(std::initializer_list<std::uint64_t> words) noexcept
{
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words)
    h = mix64(h ^ mix64(w));
  return h;
}

double
CounterRng::standard_normal() noexcept
{
  // Box-Muller, one variate per call; the partner is discarded so that a
  // draw depends only on the counter.
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace mdeconv
