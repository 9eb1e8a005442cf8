#pragma once

#include <cstddef>

// Vectorized elementwise transcendentals used on hot paths. Results agree with
// the <cmath> functions to a few ulp.
namespace psep::vmath {

void exp(const double* in, double* out, std::size_t n);
void tanh(const double* in, double* out, std::size_t n);
void sigmoid(const double* in, double* out, std::size_t n);

}  // namespace psep::vmath
