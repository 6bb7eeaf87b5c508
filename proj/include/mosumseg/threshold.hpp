#pragma once

#include <cstddef>
#include <utility>

namespace mosumseg {

enum class ThresholdMode { Asymptotic, Inflated };

struct ThresholdSpec {
    double alpha{0.05};
    std::size_t n{0};
    std::size_t G{0};
    std::size_t p{1};
    ThresholdMode mode{ThresholdMode::Asymptotic};
    // Inflated mode: D = inflation * sqrt(log(n/G)), inflation >= 1. Meant for
    // scaling estimators that are only bounded (not consistent) away from
    // changes; the constant is a user heuristic.
    double inflation{1.0};
};

struct Norming {
    double a;
    double b;
};

// a(x) = sqrt(2 log x),
// b(x) = 2 log x + (p/2) log log x - log((2/3) Gamma(p/2)).
// Requires x > e.
Norming norming(double x, std::size_t p);

// (1 - alpha) quantile of the limit law P(E <= x) = exp(-2 exp(-x)):
// c = -log log (1 / sqrt(1 - alpha)).
double gumbel_quantile(double alpha);

// Limit CDF exp(-2 exp(-x)).
double gumbel_cdf(double x);

// Segmentation threshold D = (b(n/G) + c_alpha) / a(n/G), or the inflated
// variant.
double threshold(const ThresholdSpec& spec);

} // namespace mosumseg
