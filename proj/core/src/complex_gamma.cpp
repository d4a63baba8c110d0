#include "mdeconv/complex_gamma.hpp"
#include "mdeconv/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mdeconv {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoef = {
  0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
  771.32342877765313,      -176.61502916214059,   12.507343278686905,
  -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7
};

cplx
lanczos(cplx z)
{
  z -= 1.0;
  cplx x = kLanczosCoef[0];
  for (std::size_t i = 1; i < kLanczosCoef.size(); ++i)
    x += kLanczosCoef[i] / (z + static_cast<double>(i));
  const cplx t = z + kLanczosG + 0.5;
  return std::sqrt(2.0 * std::numbers::pi) *
         std::exp((z + 0.5) * std::log(t) - t) * x;
}

} // namespace

cplx
complex_gamma(cplx z)
{
  if (z.imag() == 0.0 && z.real() <= 0.0 &&
      z.real() == std::nearbyint(z.real())) {
    std::ostringstream os;
    os << "Gamma has a pole at z = " << z.real();
    throw PoleError(os.str());
  }
  if (z.real() < 0.5) {
    // Gamma(z) Gamma(1-z) = pi / sin(pi z)
    return std::numbers::pi /
           (std::sin(std::numbers::pi * z) * lanczos(1.0 - z));
  }
  return lanczos(z);
}

} // namespace mdeconv
