#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

// Central finite differences against analytic gradients; the independent
// oracle used throughout the gradient tests.

namespace tamix_test {

//! d/dx f() at *x via central differences with step h.
inline double central_diff(const std::function<double()>& f, double* x, double h) {
    const double saved = *x;
    *x = saved + h;
    const double up = f();
    *x = saved - h;
    const double down = f();
    *x = saved;
    return (up - down) / (2.0 * h);
}

//! Relative error with an absolute floor so tiny-gradient noise cannot
//! dominate the ratio.
inline double rel_error(double analytic, double numeric, double floor = 1e-4) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

} // namespace tamix_test
