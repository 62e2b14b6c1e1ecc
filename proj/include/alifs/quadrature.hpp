#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace alifs {

struct Integral {
    double value = 0.0;
    double abs_error = 0.0;
};

// Double-exponential quadrature over [a, b] split at the given interior
// breakpoints. Endpoint singularities of the integrand are tolerated.
template <class F>
Integral integrate_pieces(F&& f, double a, double b, std::vector<double> breaks, double rel_tol = 1e-13) {
    thread_local boost::math::quadrature::tanh_sinh<double> ts(15);
    Integral out;
    if (!(b > a)) return out;
    breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double x) { return !(x > a && x < b); }),
                 breaks.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<double> knots;
    knots.push_back(a);
    knots.insert(knots.end(), breaks.begin(), breaks.end());
    knots.push_back(b);
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double err = 0.0, l1 = 0.0;
        const double v = ts.integrate(
            [&](double x) {
                const double y = f(x);
                return std::isfinite(y) ? y : 0.0;
            },
            knots[i], knots[i + 1], rel_tol, &err, &l1);
        out.value += v;
        out.abs_error += err;
    }
    return out;
}

}  // namespace alifs
