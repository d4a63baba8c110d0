#pragma once

#include <complex>

namespace mdeconv {

using cplx = std::complex<double>;

//! Gamma function on the complex plane (Lanczos, g = 7, 9 terms; reflection
//! for Re(z) < 1/2). Throws PoleError at z = 0, -1, -2, ...
cplx complex_gamma(cplx z);

} // namespace mdeconv
