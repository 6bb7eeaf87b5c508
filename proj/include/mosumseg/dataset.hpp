#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace mosumseg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Half-open range [begin, end) of zero-based sample positions.
struct Window {
    std::size_t begin{0};
    std::size_t end{0};

    std::size_t size() const { return end - begin; }
    bool empty() const { return end <= begin; }

    // Window covering the one-based inclusive range a..b.
    static Window inclusive(std::size_t a, std::size_t b) { return {a - 1, b}; }
};

// Non-owning view of one observation tuple.
struct SampleView {
    std::span<const double> response;
    std::span<const double> covariates;
};

// One observation tuple: response plus covariates (intercept-augmented
// regressors, or (1, X_{i-1}) for autoregressive count models).
struct SampleTuple {
    std::vector<double> response;
    std::vector<double> covariates;

    SampleView view() const { return {response, covariates}; }
};

// Row store of sample tuples. Row i holds sample i; every row has the same
// response and covariate width.
//
// `offset` is the position of sample 0 in the original observation sequence
// (1 when the first observation is consumed as a lag), so a split after
// sample k corresponds to a change after observation k + offset.
class Dataset {
public:
    Dataset() = default;
    Dataset(RowMatrix response, RowMatrix covariates, std::size_t offset = 0);

    static Dataset univariate(std::span<const double> values);
    static Dataset multivariate(RowMatrix rows);
    // Response y with regressors (no intercept column); an intercept is
    // prepended.
    static Dataset regression(std::span<const double> y, const RowMatrix& regressors);
    // Regression with caller-supplied design rows Z_i (no intercept added).
    static Dataset regression_design(std::span<const double> y, RowMatrix design);
    // Count series X_1..X_N; sample i pairs X_{i+1} with lag X_i, so the
    // dataset has N-1 samples and offset 1.
    static Dataset inarch(std::span<const double> counts);
    // Count series X_1..X_n with known initial value X_0; n samples, offset 0.
    static Dataset inarch(double initial, std::span<const double> counts);

    std::size_t size() const { return static_cast<std::size_t>(response_.rows()); }
    std::size_t response_dim() const { return static_cast<std::size_t>(response_.cols()); }
    std::size_t covariate_dim() const { return static_cast<std::size_t>(covariates_.cols()); }
    std::size_t offset() const { return offset_; }

    const RowMatrix& response() const { return response_; }
    const RowMatrix& covariates() const { return covariates_; }

    // First response component of sample i.
    double y(std::size_t i) const { return response_(static_cast<Eigen::Index>(i), 0); }

    SampleView view(std::size_t i) const;
    SampleTuple sample(std::size_t i) const;
    Dataset slice(Window w) const;
    // First response component over a window.
    std::vector<double> responses(Window w) const;

private:
    RowMatrix response_;
    RowMatrix covariates_;
    std::size_t offset_{0};
};

} // namespace mosumseg
