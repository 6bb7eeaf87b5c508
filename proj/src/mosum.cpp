#include "mosumseg/mosum.hpp"

#include "mosumseg/errors.hpp"

#include <cmath>
#include <limits>

namespace mosumseg {

std::string to_string(Statistic s) {
    return s == Statistic::Wald ? "wald" : "score";
}

bool ScanResult::ridged() const {
    for (const auto& w : warnings) {
        if (w.flag == "ridge") {
            return true;
        }
    }
    return false;
}

namespace {

void validate(const Dataset& data, const EstimatingModel& model, const ScanConfig& config) {
    model.check_compatible(data);
    const std::size_t n = data.size();
    if (config.G < model.dimension() + 1) {
        throw UsageError("scan: bandwidth must be at least p + 1");
    }
    if (2 * config.G >= n) {
        throw UsageError("scan: need 2G < n");
    }
}

} // namespace

RowMatrix moving_score_sums(const RowMatrix& h, std::size_t G) {
    const auto n = static_cast<std::size_t>(h.rows());
    if (G == 0 || n < 2 * G) {
        throw UsageError("moving_score_sums: need n >= 2G > 0");
    }
    const std::size_t count = n - 2 * G + 1;
    RowMatrix m(static_cast<Eigen::Index>(count), h.cols());
    Eigen::RowVectorXd left = h.topRows(static_cast<Eigen::Index>(G)).colwise().sum();
    Eigen::RowVectorXd right = h.middleRows(static_cast<Eigen::Index>(G), static_cast<Eigen::Index>(G)).colwise().sum();
    m.row(0) = right - left;
    for (std::size_t j = 1; j < count; ++j) {
        const std::size_t k = G + j - 1;  // advance from split k to k + 1
        const auto row = [&](std::size_t i) { return h.row(static_cast<Eigen::Index>(i)); };
        left += row(k) - row(k - G);
        right += row(k + G) - row(k);
        m.row(static_cast<Eigen::Index>(j)) = right - left;
    }
    return m;
}

Vector resolve_inspection(const Dataset& data, const EstimatingModel& model, const Inspection& inspection) {
    switch (inspection.kind) {
    case Inspection::Kind::Fixed:
        if (static_cast<std::size_t>(inspection.theta.size()) != model.dimension()) {
            throw UsageError("inspection: fixed parameter has wrong dimension");
        }
        return inspection.theta;
    case Inspection::Kind::GlobalFit:
        return model.inspection_fit(data, {0, data.size()});
    case Inspection::Kind::RangeFit:
        if (inspection.range.end > data.size() || inspection.range.empty()) {
            throw UsageError("inspection: range out of bounds");
        }
        return model.inspection_fit(data, inspection.range);
    }
    throw UsageError("inspection: unknown kind");
}

ScanResult score_scan(const Dataset& data, const EstimatingModel& model, const ScanConfig& config) {
    validate(data, model, config);
    const std::size_t G = config.G;
    ScanResult result;
    result.statistic = Statistic::Score;
    result.n = data.size();
    result.G = G;
    result.inspection_theta = resolve_inspection(data, model, config.inspection);

    const RowMatrix h = score_series(model, data, result.inspection_theta);
    result.signal = moving_score_sums(h, G);
    ScoreScalingSeries scaling(data, model, result.inspection_theta, h, G, config.scaling);

    const double norm = 1.0 / std::sqrt(2.0 * static_cast<double>(G));
    result.stats.resize(static_cast<std::size_t>(result.signal.rows()));
    for (std::size_t j = 0; j < result.stats.size(); ++j) {
        const std::size_t k = G + j;
        const ScalingAtK s = scaling.at(k);
        if (s.ridged) {
            result.warnings.push_back({k, "ridge"});
        }
        result.stats[j] = norm * (s.inv_sqrt * result.signal.row(static_cast<Eigen::Index>(j)).transpose()).norm();
    }
    return result;
}

ScanResult wald_scan(const Dataset& data, const EstimatingModel& model, const ScanConfig& config) {
    validate(data, model, config);
    const std::size_t G = config.G;
    const std::size_t n = data.size();
    const auto p = static_cast<Eigen::Index>(model.dimension());
    const ScalingPolicy& policy = config.scaling;

    std::optional<ScalingAtK> constant;
    switch (policy.kind) {
    case ScalingKind::Known:
        if (policy.known.rows() != p || policy.known.cols() != p) {
            throw UsageError("known scaling: matrix dimension differs from model dimension");
        }
        constant = make_scaling(0, policy.known, policy);
        break;
    case ScalingKind::WaldLocal:
        break;
    case ScalingKind::InarchGamma:
        if (model.kind() != ModelKind::Inarch) {
            throw UsageError("inarch-gamma scaling requires the inarch model");
        }
        break;
    default:
        throw UsageError(to_string(policy.kind) + " scaling applies to the score statistic only");
    }

    ScanResult result;
    result.statistic = Statistic::Wald;
    result.n = n;
    result.G = G;
    const std::size_t count = n - 2 * G + 1;
    result.stats.assign(count, std::numeric_limits<double>::quiet_NaN());
    result.signal = RowMatrix::Constant(static_cast<Eigen::Index>(count), p, std::numeric_limits<double>::quiet_NaN());
    result.left_fits = result.signal;
    result.right_fits = result.signal;

    auto rolling_left = model.rolling_fit(data);
    auto rolling_right = model.rolling_fit(data);
    if (rolling_left) {
        for (std::size_t i = 0; i < G; ++i) {
            rolling_left->add(i);
            rolling_right->add(i + G);
        }
    }

    std::optional<Vector> warm_left;
    std::optional<Vector> warm_right;
    std::size_t failures = 0;
    const double norm = std::sqrt(0.5 * static_cast<double>(G));

    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t k = G + j;
        if (rolling_left && j > 0) {
            rolling_left->remove(k - 1 - G);
            rolling_left->add(k - 1);
            rolling_right->remove(k - 1);
            rolling_right->add(k - 1 + G);
        }
        Vector theta_left;
        Vector theta_right;
        try {
            if (rolling_left) {
                theta_left = rolling_left->solve();
                theta_right = rolling_right->solve();
            } else {
                theta_left = model.fit(data, {k - G, k}, warm_left ? &*warm_left : nullptr);
                theta_right = model.fit(data, {k, k + G}, warm_right ? &*warm_right : nullptr);
            }
        } catch (const NumericalError&) {
            result.warnings.push_back({k, "fit-failure"});
            ++failures;
            continue;
        }
        warm_left = theta_left;
        warm_right = theta_right;

        ScalingAtK s;
        if (constant) {
            s = *constant;
        } else if (policy.kind == ScalingKind::InarchGamma) {
            s = inarch_gamma(data, k, G, theta_left, theta_right, policy);
        } else {
            s = wald_local_gamma(data, model, k, G, theta_left, theta_right, policy);
        }
        if (s.ridged) {
            result.warnings.push_back({k, "ridge"});
        }
        const Vector diff = theta_right - theta_left;
        const auto row = static_cast<Eigen::Index>(j);
        result.left_fits.row(row) = theta_left.transpose();
        result.right_fits.row(row) = theta_right.transpose();
        result.signal.row(row) = diff.transpose();
        result.stats[j] = norm * (s.inv_sqrt * diff).norm();
    }

    if (static_cast<double>(failures) > config.max_missing_fraction * static_cast<double>(count)) {
        throw NumericalError("wald scan: window fits failed at " + std::to_string(failures) + " of " +
                             std::to_string(count) + " positions");
    }
    return result;
}

ScanResult scan(const Dataset& data, const EstimatingModel& model, const ScanConfig& config) {
    return config.statistic == Statistic::Wald ? wald_scan(data, model, config)
                                               : score_scan(data, model, config);
}

} // namespace mosumseg
