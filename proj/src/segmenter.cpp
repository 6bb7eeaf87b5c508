#include "mosumseg/segmenter.hpp"

#include "mosumseg/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace mosumseg {

std::vector<ExceedingInterval> find_exceedings(std::span<const double> stats, std::size_t first_k,
                                               double D, double epsilon, std::size_t G) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw UsageError("find_exceedings: epsilon must lie in (0, 1/2)");
    }
    const double min_length = epsilon * static_cast<double>(G);
    std::vector<ExceedingInterval> out;
    std::size_t j = 0;
    while (j < stats.size()) {
        if (!(stats[j] >= D)) {
            ++j;
            continue;
        }
        const std::size_t start = j;
        while (j < stats.size() && stats[j] >= D) {
            ++j;
        }
        const std::size_t end = j - 1;
        if (static_cast<double>(end - start) >= min_length) {
            ExceedingInterval iv{first_k + start, first_k + end, first_k + start, stats[start]};
            for (std::size_t i = start + 1; i <= end; ++i) {
                if (stats[i] > iv.peak_value) {
                    iv.peak_value = stats[i];
                    iv.peak_k = first_k + i;
                }
            }
            out.push_back(iv);
        }
    }
    return out;
}

std::vector<std::size_t> locate(std::span<const double> stats, std::size_t first_k,
                                std::span<const ExceedingInterval> intervals) {
    std::vector<std::size_t> out;
    out.reserve(intervals.size());
    for (const auto& iv : intervals) {
        if (iv.v < first_k || iv.w < iv.v || iv.w - first_k >= stats.size()) {
            throw UsageError("locate: interval outside the statistic range");
        }
        std::size_t best = iv.v;
        for (std::size_t k = iv.v + 1; k <= iv.w; ++k) {
            if (stats[k - first_k] > stats[best - first_k]) {
                best = k;
            }
        }
        out.push_back(best);
    }
    return out;
}

namespace {

Eigen::LLT<Matrix> check_psi(const Matrix& psi, Eigen::Index p) {
    if (psi.rows() != p || psi.cols() != p) {
        throw UsageError("relocation: Psi has wrong dimension");
    }
    if ((psi - psi.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, psi.cwiseAbs().maxCoeff())) {
        throw UsageError("relocation: Psi must be symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> es(psi, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12) {
        throw UsageError("relocation: Psi must be positive definite with condition number <= 1e12");
    }
    return Eigen::LLT<Matrix>(psi);
}

// Argmax over rows of `signal` (row j <-> k = first_k + j) restricted to the
// interval, ties to the smallest k.
std::size_t argmax_quadratic(const RowMatrix& signal, std::size_t first_k, const ExceedingInterval& iv,
                             const Eigen::LLT<Matrix>& llt) {
    std::size_t best = iv.v;
    double best_value = -1.0;
    for (std::size_t k = iv.v; k <= iv.w; ++k) {
        const Vector m = signal.row(static_cast<Eigen::Index>(k - first_k)).transpose();
        const double q = m.dot(llt.solve(m));
        if (q > best_value) {
            best_value = q;
            best = k;
        }
    }
    return best;
}

} // namespace

std::size_t relocate_with_psi(const Dataset& data, const EstimatingModel& model, const Vector& theta_tilde,
                              const ExceedingInterval& interval, const Matrix& psi, std::size_t G) {
    const auto llt = check_psi(psi, static_cast<Eigen::Index>(model.dimension()));
    if (interval.w < interval.v || interval.v < G || interval.w + G > data.size()) {
        throw UsageError("relocation: interval must lie in [G, n - G]");
    }
    // Moving sums over the stretch that the interval's windows touch.
    const Window stretch{interval.v - G, interval.w + G};
    const RowMatrix h = score_series(model, data.slice(stretch), theta_tilde);
    const RowMatrix m = moving_score_sums(h, G);
    return argmax_quadratic(m, interval.v, interval, llt);
}

std::size_t relocate_on_signal(const ScanResult& scan, const ExceedingInterval& interval, const Matrix& psi) {
    const auto llt = check_psi(psi, scan.signal.cols());
    if (interval.w < interval.v || interval.v < scan.first_k() || interval.w > scan.last_k()) {
        throw UsageError("relocation: interval outside the scan range");
    }
    return argmax_quadratic(scan.signal, scan.first_k(), interval, llt);
}

double segmentation_threshold(const SegmentConfig& config, std::size_t n, std::size_t p) {
    ThresholdSpec spec;
    spec.alpha = config.alpha;
    spec.n = n;
    spec.G = config.scan.G;
    spec.p = p;
    spec.mode = config.threshold_mode;
    spec.inflation = config.inflation;
    return threshold(spec);
}

namespace {

// Intervals and located estimates of one scan.
std::vector<ChangePoint> estimates_from_scan(const ScanResult& scan, const SegmentConfig& config, double D,
                                             std::size_t pass) {
    const auto intervals = find_exceedings(scan.stats, scan.first_k(), D, config.epsilon, scan.G);
    std::vector<std::size_t> ks = locate(scan.stats, scan.first_k(), intervals);
    if (config.relocate) {
        const auto p = scan.signal.cols();
        const Matrix psi = config.psi.value_or(Matrix::Identity(p, p));
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            ks[i] = relocate_on_signal(scan, intervals[i], psi);
        }
    }
    std::vector<ChangePoint> out;
    out.reserve(intervals.size());
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        out.push_back({ks[i], intervals[i], pass, scan.inspection_theta});
    }
    return out;
}

void append_warnings(SegmentationResult& result, const ScanResult& scan) {
    result.warnings.insert(result.warnings.end(), scan.warnings.begin(), scan.warnings.end());
}

} // namespace

SegmentationResult segment(const Dataset& data, const EstimatingModel& model, const SegmentConfig& config) {
    const double D = segmentation_threshold(config, data.size(), model.dimension());
    ScanResult s = scan(data, model, config.scan);

    SegmentationResult result;
    result.threshold = D;
    result.changepoints = estimates_from_scan(s, config, D, 1);
    result.q_hat = result.changepoints.size();
    PassInfo info;
    info.id = 1;
    info.inspection_theta = s.inspection_theta;
    if (config.scan.statistic == Statistic::Score) {
        const auto& insp = config.scan.inspection;
        info.inspection_range = insp.kind == Inspection::Kind::RangeFit ? insp.range : Window{0, data.size()};
    }
    info.found = result.q_hat;
    result.passes.push_back(info);
    append_warnings(result, s);
    result.scans.push_back(std::move(s));
    return result;
}

SegmentationResult segment_recursive(const Dataset& data, const EstimatingModel& model,
                                     const SegmentConfig& config, std::size_t max_depth) {
    if (config.scan.statistic != Statistic::Score) {
        throw UsageError("recursive segmentation requires the score statistic");
    }
    if (max_depth < 1) {
        throw UsageError("recursive segmentation: max_depth must be >= 1");
    }
    const std::size_t n = data.size();
    const std::size_t G = config.scan.G;
    const double D = segmentation_threshold(config, n, model.dimension());
    const double merge_radius = 0.5 * static_cast<double>(G);
    const double min_segment = (2.0 + config.epsilon) * static_cast<double>(G);

    SegmentationResult result;
    result.threshold = D;

    auto run_pass = [&](Window range, std::size_t id) {
        SegmentConfig cfg = config;
        cfg.scan.inspection = range.begin == 0 && range.end == n ? Inspection::global() : Inspection::on_range(range);
        ScanResult s = scan(data, model, cfg.scan);
        std::vector<ChangePoint> found = estimates_from_scan(s, cfg, D, id);
        result.passes.push_back({id, range, s.inspection_theta, found.size()});
        append_warnings(result, s);
        result.scans.push_back(std::move(s));
        return found;
    };

    // Merges an estimate; returns true when it was appended as a new change.
    auto merge = [&](const ChangePoint& cp) {
        for (auto& existing : result.changepoints) {
            const double gap = std::abs(static_cast<double>(existing.k) - static_cast<double>(cp.k));
            if (gap <= merge_radius) {
                if (cp.interval.peak_value > existing.interval.peak_value) {
                    existing = cp;
                }
                return false;
            }
        }
        result.changepoints.push_back(cp);
        return true;
    };

    for (const auto& cp : run_pass({0, n}, 1)) {
        merge(cp);
    }

    std::set<std::pair<std::size_t, std::size_t>> visited{{0, n}};
    std::size_t next_id = 2;
    for (std::size_t depth = 2; depth <= max_depth; ++depth) {
        std::vector<std::size_t> bounds{0};
        for (const auto& cp : result.changepoints) {
            bounds.push_back(cp.k);
        }
        bounds.push_back(n);
        std::sort(bounds.begin(), bounds.end());

        bool added = false;
        for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
            const Window seg{bounds[i], bounds[i + 1]};
            if (static_cast<double>(seg.size()) < min_segment || !visited.insert({seg.begin, seg.end}).second) {
                continue;
            }
            for (const auto& cp : run_pass(seg, next_id)) {
                added = merge(cp) || added;
            }
            ++next_id;
        }
        if (!added) {
            break;
        }
    }

    std::sort(result.changepoints.begin(), result.changepoints.end(),
              [](const ChangePoint& a, const ChangePoint& b) { return a.k < b.k; });
    result.q_hat = result.changepoints.size();
    return result;
}

} // namespace mosumseg
