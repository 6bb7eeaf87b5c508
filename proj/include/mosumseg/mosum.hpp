#pragma once

#include "mosumseg/dataset.hpp"
#include "mosumseg/estimators.hpp"
#include "mosumseg/scaling.hpp"

#include <string>
#include <vector>

namespace mosumseg {

enum class Statistic { Wald, Score };

std::string to_string(Statistic s);

// Inspection parameter for the score statistic.
struct Inspection {
    enum class Kind { Fixed, GlobalFit, RangeFit };

    Kind kind{Kind::GlobalFit};
    Vector theta;  // Fixed
    Window range;  // RangeFit

    static Inspection fixed(Vector theta) { return {Kind::Fixed, std::move(theta), {}}; }
    static Inspection global() { return {Kind::GlobalFit, {}, {}}; }
    static Inspection on_range(Window w) { return {Kind::RangeFit, {}, w}; }
};

struct ScanConfig {
    std::size_t G{0};
    Statistic statistic{Statistic::Score};
    Inspection inspection{};
    ScalingPolicy scaling{};
    // Wald: fraction of k with a failed window fit above which the scan fails.
    double max_missing_fraction{0.01};
};

struct ScanWarning {
    std::size_t k;
    std::string flag;  // "ridge" or "fit-failure"
};

// Statistic series T_k for k = G, ..., n - G (index j holds k = G + j).
// Missing values (failed Wald fits) are NaN.
struct ScanResult {
    Statistic statistic{Statistic::Score};
    std::size_t n{0};
    std::size_t G{0};
    std::vector<double> stats;
    std::vector<ScanWarning> warnings;
    Vector inspection_theta;   // score statistic only
    // Vector whose scaled norm is the statistic: M(k) for the score statistic,
    // theta_right - theta_left for the Wald statistic. Row j <-> k = G + j.
    RowMatrix signal;
    // Wald only: local fits, row j <-> k = G + j.
    RowMatrix left_fits;
    RowMatrix right_fits;

    std::size_t first_k() const { return G; }
    std::size_t last_k() const { return n - G; }
    double at(std::size_t k) const { return stats[k - G]; }
    bool ridged() const;
};

// M(k) = sum_{i=k+1}^{k+G} h_i - sum_{i=k-G+1}^{k} h_i (one-based) for
// k = G..n-G, by O(p) rolling updates. Row j <-> k = G + j.
RowMatrix moving_score_sums(const RowMatrix& h, std::size_t G);

// Resolves the inspection parameter (GlobalFit / RangeFit use the model's
// inspection estimator).
Vector resolve_inspection(const Dataset& data, const EstimatingModel& model, const Inspection& inspection);

// MOSUM-score statistic T_k = (2G)^{-1/2} || Sigma_k^{-1/2} M(k) ||.
ScanResult score_scan(const Dataset& data, const EstimatingModel& model, const ScanConfig& config);

// MOSUM-Wald statistic T_k = sqrt(G/2) || Gamma_k^{-1/2} (theta_R - theta_L) ||.
ScanResult wald_scan(const Dataset& data, const EstimatingModel& model, const ScanConfig& config);

// Dispatches on config.statistic.
ScanResult scan(const Dataset& data, const EstimatingModel& model, const ScanConfig& config);

} // namespace mosumseg
