#pragma once

#include "mosumseg/dataset.hpp"
#include "mosumseg/estimators.hpp"
#include "mosumseg/mosum.hpp"
#include "mosumseg/threshold.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mosumseg {

// Maximal run v..w (inclusive, in k units) of T_k >= D with w - v >= eps * G.
struct ExceedingInterval {
    std::size_t v{0};
    std::size_t w{0};
    std::size_t peak_k{0};
    double peak_value{0.0};
};

struct ChangePoint {
    std::size_t k{0};  // number of samples before the change
    ExceedingInterval interval;
    std::size_t pass{1};
    Vector inspection_theta;
};

// One scan performed during segmentation.
struct PassInfo {
    std::size_t id{1};
    Window inspection_range;  // samples the inspection parameter was fitted on
    Vector inspection_theta;
    std::size_t found{0};     // estimates produced by this pass before merging
};

struct SegmentationResult {
    std::size_t q_hat{0};
    std::vector<ChangePoint> changepoints;  // ordered by k
    double threshold{0.0};
    std::vector<PassInfo> passes;
    std::vector<ScanResult> scans;  // one per pass, in pass order
    std::vector<ScanWarning> warnings;
};

struct SegmentConfig {
    ScanConfig scan;
    double alpha{0.05};
    ThresholdMode threshold_mode{ThresholdMode::Asymptotic};
    double inflation{1.0};
    double epsilon{0.2};
    // Refine each estimate by maximizing m' Psi^-1 m over its interval.
    bool relocate{false};
    std::optional<Matrix> psi;  // identity when unset
};

// Intervals of exceedings over stats indexed k = first_k, first_k + 1, ...
// NaN entries break runs. Runs touching either end of the series count.
std::vector<ExceedingInterval> find_exceedings(std::span<const double> stats, std::size_t first_k,
                                               double D, double epsilon, std::size_t G);

// Argmax of stats over each interval; ties go to the smallest k.
std::vector<std::size_t> locate(std::span<const double> stats, std::size_t first_k,
                                std::span<const ExceedingInterval> intervals);

// argmax_{v<=k<=w} M(k)' Psi^-1 M(k) with M the bandwidth-G moving score
// sums at theta_tilde. Psi must be SPD with condition number <= 1e12.
std::size_t relocate_with_psi(const Dataset& data, const EstimatingModel& model, const Vector& theta_tilde,
                              const ExceedingInterval& interval, const Matrix& psi, std::size_t G);

// Same objective over a scan's stored signal vectors.
std::size_t relocate_on_signal(const ScanResult& scan, const ExceedingInterval& interval, const Matrix& psi);

// Threshold for a scan of `data` under the config.
double segmentation_threshold(const SegmentConfig& config, std::size_t n, std::size_t p);

SegmentationResult segment(const Dataset& data, const EstimatingModel& model, const SegmentConfig& config);

// Score statistic only. Pass 1 uses the global inspection parameter; each
// later pass refits the inspection parameter on a segment between adjacent
// estimates (length >= 2G + eps G) and rescans the full series. Estimates
// within G/2 of an existing one are merged, keeping the larger peak.
SegmentationResult segment_recursive(const Dataset& data, const EstimatingModel& model,
                                     const SegmentConfig& config, std::size_t max_depth = 3);

} // namespace mosumseg
