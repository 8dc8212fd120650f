#pragma once

#include <cmath>
#include <cstddef>

namespace wdro {

struct GoldenResult {
    double x = 0.0;
    double fx = 0.0;
    std::size_t iterations = 0;
};

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
/// Stops once the bracket is narrower than x_tol; returns the best point evaluated,
/// endpoints included.
template <typename F>
GoldenResult golden_section_minimize(F&& f, double lo, double hi, double x_tol,
                                     std::size_t max_iter = 400) {
    constexpr double kInvPhi = 0.6180339887498948482;
    GoldenResult best{lo, f(lo), 0};
    if (!(hi > lo)) return best;
    auto consider = [&](double x, double fx) {
        if (fx < best.fx) {
            best.x = x;
            best.fx = fx;
        }
    };
    consider(hi, f(hi));

    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    consider(c, fc);
    consider(d, fd);
    std::size_t it = 0;
    while (b - a > x_tol && it < max_iter) {
        ++it;
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
            consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
            consider(d, fd);
        }
    }
    best.iterations = it;
    return best;
}

}  // namespace wdro
