#pragma once

namespace sdehnn {

// Inverse standard-normal CDF (Wichura's PPND16 rational approximation,
// absolute error well below 1e-8 over (0,1)).
double inverse_normal_cdf(double p);

// Standard normal CDF via erf.
double normal_cdf(double x);

}  // namespace sdehnn
