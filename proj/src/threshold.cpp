#include "mosumseg/threshold.hpp"

#include "mosumseg/errors.hpp"

#include <cmath>
#include <numbers>

namespace mosumseg {

Norming norming(double x, std::size_t p) {
    if (!(x > std::numbers::e)) {
        throw DomainError("norming: need n/G > e");
    }
    if (p == 0) {
        throw UsageError("norming: parameter dimension must be positive");
    }
    const double lx = std::log(x);
    const double half_p = 0.5 * static_cast<double>(p);
    return {std::sqrt(2.0 * lx),
            2.0 * lx + half_p * std::log(lx) - (std::log(2.0 / 3.0) + std::lgamma(half_p))};
}

double gumbel_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("gumbel_quantile: alpha must lie in (0, 1)");
    }
    // log(1/sqrt(1-alpha)) = -log1p(-alpha)/2
    return -std::log(-0.5 * std::log1p(-alpha));
}

double gumbel_cdf(double x) {
    return std::exp(-2.0 * std::exp(-x));
}

double threshold(const ThresholdSpec& spec) {
    if (spec.G == 0 || 2 * spec.G >= spec.n) {
        throw UsageError("threshold: need 0 < 2G < n");
    }
    const double x = static_cast<double>(spec.n) / static_cast<double>(spec.G);
    if (spec.mode == ThresholdMode::Inflated) {
        if (!(spec.inflation >= 1.0)) {
            throw UsageError("threshold: inflation factor must be >= 1");
        }
        if (!(x > std::numbers::e)) {
            throw DomainError("threshold: need n/G > e");
        }
        return spec.inflation * std::sqrt(std::log(x));
    }
    const Norming nb = norming(x, spec.p);
    return (nb.b + gumbel_quantile(spec.alpha)) / nb.a;
}

} // namespace mosumseg
