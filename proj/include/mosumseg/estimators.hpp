#pragma once

#include "mosumseg/dataset.hpp"

#include <memory>
#include <optional>
#include <string>

namespace mosumseg {

enum class ModelKind { Mean, MedianLike, SignMedian, MultivariateMean, LinearRegression, Inarch };

// Per-sample normalized tolerance on the fitted score sum,
// ||sum_i H(X_i, theta_hat)|| <= kFitTolerance * |window|.
inline constexpr double kFitTolerance = 1e-8;

// Closed-form window fit maintained under add/remove of single samples.
class RollingFit {
public:
    virtual ~RollingFit() = default;
    virtual void add(std::size_t i) = 0;
    virtual void remove(std::size_t i) = 0;
    virtual Vector solve() const = 0;
};

// A parametric model given by an estimating function H, its Jacobian and a
// window solver for sum_i H(X_i, theta) = 0.
//
// Jacobian convention: jacobian(x, theta)(a, b) = dH_a / dtheta_b, so the
// window average of it is the matrix V with
//   -(1/G) sum H(X_i, theta) ~= V (theta_hat - theta).
class EstimatingModel {
public:
    virtual ~EstimatingModel() = default;

    virtual ModelKind kind() const = 0;
    virtual std::string name() const = 0;
    std::size_t dimension() const { return dimension_; }

    // Throws UsageError when the dataset's widths do not fit the model.
    virtual void check_compatible(const Dataset& data) const = 0;

    virtual void score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const = 0;
    virtual void jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const = 0;

    // Solves the estimating equations on the window. `warm_start` seeds
    // iterative solvers and is ignored by closed forms.
    virtual Vector fit(const Dataset& data, Window w, const Vector* warm_start = nullptr) const = 0;

    // Estimator used for data-driven inspection parameters; defaults to fit.
    virtual Vector inspection_fit(const Dataset& data, Window w) const { return fit(data, w); }

    // Rolling closed-form fitter, or nullptr when the model refits per window.
    virtual std::unique_ptr<RollingFit> rolling_fit(const Dataset& /*data*/) const { return nullptr; }

    // Smallest window the fitter accepts.
    virtual std::size_t min_window() const { return dimension_; }

protected:
    explicit EstimatingModel(std::size_t p) : dimension_(p) {}

    void check_window(const Dataset& data, Window w) const;

private:
    std::size_t dimension_;
};

// H(x, mu) = x - mu.
class MeanModel final : public EstimatingModel {
public:
    MeanModel() : EstimatingModel(1) {}
    ModelKind kind() const override { return ModelKind::Mean; }
    std::string name() const override { return "mean"; }
    void check_compatible(const Dataset& data) const override;
    void score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const override;
    void jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const override;
    Vector fit(const Dataset& data, Window w, const Vector* warm_start = nullptr) const override;
    std::unique_ptr<RollingFit> rolling_fit(const Dataset& data) const override;
};

// How data-driven inspection parameters are computed for median models.
enum class MedianInspection { MEstimator, SampleMedian };

// H(x, mu) = (2/pi) atan(mu - x), a smooth surrogate of the median score.
class MedianLikeModel final : public EstimatingModel {
public:
    explicit MedianLikeModel(MedianInspection inspection = MedianInspection::MEstimator)
        : EstimatingModel(1), inspection_(inspection) {}
    ModelKind kind() const override { return ModelKind::MedianLike; }
    std::string name() const override { return "median-like"; }
    void check_compatible(const Dataset& data) const override;
    void score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const override;
    void jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const override;
    Vector fit(const Dataset& data, Window w, const Vector* warm_start = nullptr) const override;
    Vector inspection_fit(const Dataset& data, Window w) const override;

private:
    MedianInspection inspection_;
};

// H(x, mu) = sign(mu - x). Data transform only: there is no fitter, the
// window sample median is its inspection parameter.
class SignMedianModel final : public EstimatingModel {
public:
    SignMedianModel() : EstimatingModel(1) {}
    ModelKind kind() const override { return ModelKind::SignMedian; }
    std::string name() const override { return "sign-median"; }
    void check_compatible(const Dataset& data) const override;
    void score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const override;
    void jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const override;
    Vector fit(const Dataset& data, Window w, const Vector* warm_start = nullptr) const override;
    Vector inspection_fit(const Dataset& data, Window w) const override;
};

// Componentwise mean or median-like score on d-dimensional observations.
class MultivariateMeanModel final : public EstimatingModel {
public:
    enum class Component { Mean, MedianLike };

    explicit MultivariateMeanModel(std::size_t d, Component component = Component::Mean)
        : EstimatingModel(d), component_(component) {}
    ModelKind kind() const override { return ModelKind::MultivariateMean; }
    std::string name() const override { return "multivariate-mean"; }
    void check_compatible(const Dataset& data) const override;
    void score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const override;
    void jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const override;
    Vector fit(const Dataset& data, Window w, const Vector* warm_start = nullptr) const override;
    std::unique_ptr<RollingFit> rolling_fit(const Dataset& data) const override;

private:
    Component component_;
};

// Least squares: H((X, Z), beta) = -2 Z (X - Z'beta).
class LinearRegressionModel final : public EstimatingModel {
public:
    explicit LinearRegressionModel(std::size_t p) : EstimatingModel(p) {}
    ModelKind kind() const override { return ModelKind::LinearRegression; }
    std::string name() const override { return "linreg"; }
    void check_compatible(const Dataset& data) const override;
    void score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const override;
    void jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const override;
    Vector fit(const Dataset& data, Window w, const Vector* warm_start = nullptr) const override;
    std::unique_ptr<RollingFit> rolling_fit(const Dataset& data) const override;
};

// Poisson autoregression of order one (INARCH(1)), partial likelihood score
// H((X_i, X_{i-1}), theta) = -2 Xv (X_i / (Xv' theta) - 1), Xv = (1, X_{i-1}).
class InarchModel final : public EstimatingModel {
public:
    // Parameter box used by the fitter.
    static constexpr double kInterceptMin = 1e-6;
    static constexpr double kInterceptMax = 1e6;
    static constexpr double kSlopeMin = 1e-6;
    static constexpr double kSlopeMax = 1.0 - 1e-6;
    static constexpr int kMaxIterations = 200;

    InarchModel() : EstimatingModel(2) {}
    ModelKind kind() const override { return ModelKind::Inarch; }
    std::string name() const override { return "inarch"; }
    void check_compatible(const Dataset& data) const override;
    void score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const override;
    void jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const override;
    Vector fit(const Dataset& data, Window w, const Vector* warm_start = nullptr) const override;
    std::size_t min_window() const override { return 3; }
};

// Builds a model by CLI name: mean, median-like, sign-median, multimean,
// linreg, inarch. `dimension` is required for multimean and linreg.
std::unique_ptr<EstimatingModel> make_model(const std::string& name, std::size_t dimension = 0);

Vector eval_score(const EstimatingModel& model, const SampleTuple& sample, const Vector& theta);
Matrix eval_jacobian(const EstimatingModel& model, const SampleTuple& sample, const Vector& theta);

// Window average of the score Jacobian (the empirical V).
Matrix eval_v(const EstimatingModel& model, const Dataset& data, Window w, const Vector& theta);

// Sum of scores over the window.
Vector score_sum(const EstimatingModel& model, const Dataset& data, Window w, const Vector& theta);

// n x p matrix whose row i is H(X_i, theta).
RowMatrix score_series(const EstimatingModel& model, const Dataset& data, const Vector& theta);

// Sample median of the first response component over a window (midpoint of
// the two central order statistics for even sizes).
double sample_median(const Dataset& data, Window w);

} // namespace mosumseg
