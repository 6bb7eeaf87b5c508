#include "mosumseg/dataset.hpp"

#include "mosumseg/errors.hpp"

#include <cmath>

namespace mosumseg {

Dataset::Dataset(RowMatrix response, RowMatrix covariates, std::size_t offset)
    : response_(std::move(response)), covariates_(std::move(covariates)), offset_(offset) {
    if (covariates_.cols() == 0) {
        covariates_.resize(response_.rows(), 0);
    }
    if (covariates_.rows() != response_.rows()) {
        throw UsageError("dataset: response and covariate row counts differ");
    }
}

Dataset Dataset::univariate(std::span<const double> values) {
    RowMatrix r(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        r(static_cast<Eigen::Index>(i), 0) = values[i];
    }
    return Dataset(std::move(r), RowMatrix());
}

Dataset Dataset::multivariate(RowMatrix rows) {
    return Dataset(std::move(rows), RowMatrix());
}

Dataset Dataset::regression(std::span<const double> y, const RowMatrix& regressors) {
    if (static_cast<std::size_t>(regressors.rows()) != y.size()) {
        throw UsageError("regression: response and regressor row counts differ");
    }
    RowMatrix design(regressors.rows(), regressors.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(regressors.cols()) = regressors;
    return regression_design(y, std::move(design));
}

Dataset Dataset::regression_design(std::span<const double> y, RowMatrix design) {
    if (static_cast<std::size_t>(design.rows()) != y.size()) {
        throw UsageError("regression: response and design row counts differ");
    }
    RowMatrix r(static_cast<Eigen::Index>(y.size()), 1);
    for (std::size_t i = 0; i < y.size(); ++i) {
        r(static_cast<Eigen::Index>(i), 0) = y[i];
    }
    return Dataset(std::move(r), std::move(design));
}

namespace {

void check_count(double x) {
    if (!(x >= 0.0) || std::floor(x) != x) {
        throw UsageError("inarch: observations must be non-negative integers");
    }
}

} // namespace

Dataset Dataset::inarch(std::span<const double> counts) {
    if (counts.size() < 2) {
        throw UsageError("inarch: need at least two observations");
    }
    Dataset d = inarch(counts[0], counts.subspan(1));
    d.offset_ = 1;
    return d;
}

Dataset Dataset::inarch(double initial, std::span<const double> counts) {
    check_count(initial);
    const auto n = static_cast<Eigen::Index>(counts.size());
    RowMatrix r(n, 1);
    RowMatrix z(n, 2);
    double lag = initial;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = counts[static_cast<std::size_t>(i)];
        check_count(x);
        r(i, 0) = x;
        z(i, 0) = 1.0;
        z(i, 1) = lag;
        lag = x;
    }
    return Dataset(std::move(r), std::move(z));
}

SampleView Dataset::view(std::size_t i) const {
    const auto row = static_cast<Eigen::Index>(i);
    return {std::span<const double>(response_.row(row).data(), response_dim()),
            std::span<const double>(covariates_.row(row).data(), covariate_dim())};
}

SampleTuple Dataset::sample(std::size_t i) const {
    const SampleView v = view(i);
    return {std::vector<double>(v.response.begin(), v.response.end()),
            std::vector<double>(v.covariates.begin(), v.covariates.end())};
}

Dataset Dataset::slice(Window w) const {
    if (w.end > size() || w.begin > w.end) {
        throw UsageError("dataset: slice out of range");
    }
    const auto b = static_cast<Eigen::Index>(w.begin);
    const auto len = static_cast<Eigen::Index>(w.size());
    return Dataset(response_.middleRows(b, len), covariates_.middleRows(b, len), offset_ + w.begin);
}

std::vector<double> Dataset::responses(Window w) const {
    std::vector<double> out;
    out.reserve(w.size());
    for (std::size_t i = w.begin; i < w.end; ++i) {
        out.push_back(y(i));
    }
    return out;
}

} // namespace mosumseg
