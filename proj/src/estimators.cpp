#include "mosumseg/estimators.hpp"

#include "mosumseg/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace mosumseg {

void EstimatingModel::check_window(const Dataset& data, Window w) const {
    if (w.end > data.size() || w.begin >= w.end) {
        throw UsageError(name() + ": window out of range");
    }
    if (w.size() < min_window()) {
        throw UsageError(name() + ": window shorter than " + std::to_string(min_window()));
    }
}

namespace {

void require_univariate(const std::string& model, const Dataset& data) {
    if (data.response_dim() != 1) {
        throw UsageError(model + ": expects a univariate response");
    }
}

void require_dims(const std::string& model, const Vector& theta, std::size_t p) {
    if (static_cast<std::size_t>(theta.size()) != p) {
        throw UsageError(model + ": parameter dimension mismatch");
    }
}

double median_like_score(double x, double mu) {
    return 2.0 / std::numbers::pi * std::atan(mu - x);
}

double median_like_derivative(double x, double mu) {
    const double d = mu - x;
    return 2.0 / std::numbers::pi / (1.0 + d * d);
}

// Root of the strictly increasing map mu -> sum_i atan(mu - x_i) by bisection.
double median_like_root(const Dataset& data, Window w, std::size_t component,
                        const double* warm_start) {
    const auto col = static_cast<Eigen::Index>(component);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = w.begin; i < w.end; ++i) {
        const double x = data.response()(static_cast<Eigen::Index>(i), col);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    lo -= 1.0;
    hi += 1.0;
    auto f = [&](double mu) {
        double s = 0.0;
        for (std::size_t i = w.begin; i < w.end; ++i) {
            s += std::atan(mu - data.response()(static_cast<Eigen::Index>(i), col));
        }
        return s;
    };

    if (warm_start != nullptr && *warm_start > lo && *warm_start < hi) {
        // Narrow the bracket around the previous root.
        double step = 0.5;
        double a = *warm_start;
        double b = *warm_start;
        while (a > lo && f(a) > 0.0) {
            a = std::max(lo, a - step);
            step *= 2.0;
        }
        step = 0.5;
        while (b < hi && f(b) < 0.0) {
            b = std::min(hi, b + step);
            step *= 2.0;
        }
        lo = a;
        hi = b;
    }

    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// --- closed-form rolling fitters -------------------------------------------

class RollingMean final : public RollingFit {
public:
    explicit RollingMean(const Dataset& data)
        : data_(data), sum_(Vector::Zero(static_cast<Eigen::Index>(data.response_dim()))) {}
    void add(std::size_t i) override {
        sum_ += data_.response().row(static_cast<Eigen::Index>(i)).transpose();
        ++count_;
    }
    void remove(std::size_t i) override {
        sum_ -= data_.response().row(static_cast<Eigen::Index>(i)).transpose();
        --count_;
    }
    Vector solve() const override {
        if (count_ == 0) {
            throw UsageError("rolling mean: empty window");
        }
        return sum_ / static_cast<double>(count_);
    }

private:
    const Dataset& data_;
    Vector sum_;
    std::size_t count_{0};
};

Vector solve_normal_equations(const Matrix& gram, const Vector& cross) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmax > 0.0) || !(es.eigenvalues().minCoeff() > 1e-12 * lmax)) {
        throw SingularFit("linreg: design matrix is rank deficient on the window");
    }
    const Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success) {
        throw SingularFit("linreg: design matrix is rank deficient on the window");
    }
    return ldlt.solve(cross);
}

class RollingRegression final : public RollingFit {
public:
    explicit RollingRegression(const Dataset& data)
        : data_(data),
          gram_(Matrix::Zero(static_cast<Eigen::Index>(data.covariate_dim()),
                             static_cast<Eigen::Index>(data.covariate_dim()))),
          cross_(Vector::Zero(static_cast<Eigen::Index>(data.covariate_dim()))) {}
    void add(std::size_t i) override { update(i, 1.0); }
    void remove(std::size_t i) override { update(i, -1.0); }
    Vector solve() const override { return solve_normal_equations(gram_, cross_); }

private:
    void update(std::size_t i, double sign) {
        const auto z = data_.covariates().row(static_cast<Eigen::Index>(i)).transpose();
        gram_.noalias() += sign * z * z.transpose();
        cross_.noalias() += sign * data_.y(i) * z;
    }

    const Dataset& data_;
    Matrix gram_;
    Vector cross_;
};

} // namespace

// --- mean -------------------------------------------------------------------

void MeanModel::check_compatible(const Dataset& data) const {
    require_univariate(name(), data);
}

void MeanModel::score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const {
    require_dims(name(), theta, 1);
    out(0) = x.response[0] - theta(0);
}

void MeanModel::jacobian(SampleView /*x*/, const Vector& theta, Eigen::Ref<Matrix> out) const {
    require_dims(name(), theta, 1);
    out(0, 0) = -1.0;
}

Vector MeanModel::fit(const Dataset& data, Window w, const Vector* /*warm_start*/) const {
    check_window(data, w);
    double s = 0.0;
    for (std::size_t i = w.begin; i < w.end; ++i) {
        s += data.y(i);
    }
    return Vector::Constant(1, s / static_cast<double>(w.size()));
}

std::unique_ptr<RollingFit> MeanModel::rolling_fit(const Dataset& data) const {
    return std::make_unique<RollingMean>(data);
}

// --- median-like ------------------------------------------------------------

void MedianLikeModel::check_compatible(const Dataset& data) const {
    require_univariate(name(), data);
}

void MedianLikeModel::score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const {
    require_dims(name(), theta, 1);
    out(0) = median_like_score(x.response[0], theta(0));
}

void MedianLikeModel::jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const {
    require_dims(name(), theta, 1);
    out(0, 0) = median_like_derivative(x.response[0], theta(0));
}

Vector MedianLikeModel::fit(const Dataset& data, Window w, const Vector* warm_start) const {
    check_window(data, w);
    const double* warm = warm_start != nullptr ? warm_start->data() : nullptr;
    return Vector::Constant(1, median_like_root(data, w, 0, warm));
}

Vector MedianLikeModel::inspection_fit(const Dataset& data, Window w) const {
    if (inspection_ == MedianInspection::SampleMedian) {
        return Vector::Constant(1, sample_median(data, w));
    }
    return fit(data, w);
}

// --- sign median ------------------------------------------------------------

void SignMedianModel::check_compatible(const Dataset& data) const {
    require_univariate(name(), data);
}

void SignMedianModel::score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const {
    require_dims(name(), theta, 1);
    const double d = theta(0) - x.response[0];
    out(0) = static_cast<double>((d > 0.0) - (d < 0.0));
}

void SignMedianModel::jacobian(SampleView /*x*/, const Vector& theta, Eigen::Ref<Matrix> out) const {
    require_dims(name(), theta, 1);
    out(0, 0) = 0.0;
}

Vector SignMedianModel::fit(const Dataset& /*data*/, Window /*w*/, const Vector* /*warm_start*/) const {
    throw UsageError("sign-median: no window fitter; use it with the score statistic only");
}

Vector SignMedianModel::inspection_fit(const Dataset& data, Window w) const {
    check_window(data, w);
    return Vector::Constant(1, sample_median(data, w));
}

// --- multivariate mean ------------------------------------------------------

void MultivariateMeanModel::check_compatible(const Dataset& data) const {
    if (data.response_dim() != dimension()) {
        throw UsageError(name() + ": response width differs from model dimension");
    }
}

void MultivariateMeanModel::score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const {
    require_dims(name(), theta, dimension());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double xj = x.response[static_cast<std::size_t>(j)];
        out(j) = component_ == Component::Mean ? xj - theta(j) : median_like_score(xj, theta(j));
    }
}

void MultivariateMeanModel::jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const {
    require_dims(name(), theta, dimension());
    out.setZero();
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double xj = x.response[static_cast<std::size_t>(j)];
        out(j, j) = component_ == Component::Mean ? -1.0 : median_like_derivative(xj, theta(j));
    }
}

Vector MultivariateMeanModel::fit(const Dataset& data, Window w, const Vector* warm_start) const {
    check_window(data, w);
    const auto p = static_cast<Eigen::Index>(dimension());
    if (component_ == Component::Mean) {
        Vector s = Vector::Zero(p);
        for (std::size_t i = w.begin; i < w.end; ++i) {
            s += data.response().row(static_cast<Eigen::Index>(i)).transpose();
        }
        return s / static_cast<double>(w.size());
    }
    Vector theta(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double* warm = warm_start != nullptr ? warm_start->data() + j : nullptr;
        theta(j) = median_like_root(data, w, static_cast<std::size_t>(j), warm);
    }
    return theta;
}

std::unique_ptr<RollingFit> MultivariateMeanModel::rolling_fit(const Dataset& data) const {
    if (component_ != Component::Mean) {
        return nullptr;
    }
    return std::make_unique<RollingMean>(data);
}

// --- linear regression ------------------------------------------------------

void LinearRegressionModel::check_compatible(const Dataset& data) const {
    require_univariate(name(), data);
    if (data.covariate_dim() != dimension()) {
        throw UsageError(name() + ": design width differs from model dimension");
    }
}

void LinearRegressionModel::score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const {
    require_dims(name(), theta, dimension());
    const Eigen::Map<const Vector> z(x.covariates.data(), static_cast<Eigen::Index>(x.covariates.size()));
    const double residual = x.response[0] - z.dot(theta);
    out = -2.0 * residual * z;
}

void LinearRegressionModel::jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const {
    require_dims(name(), theta, dimension());
    const Eigen::Map<const Vector> z(x.covariates.data(), static_cast<Eigen::Index>(x.covariates.size()));
    out.noalias() = 2.0 * z * z.transpose();
}

Vector LinearRegressionModel::fit(const Dataset& data, Window w, const Vector* /*warm_start*/) const {
    check_window(data, w);
    RollingRegression acc(data);
    for (std::size_t i = w.begin; i < w.end; ++i) {
        acc.add(i);
    }
    return acc.solve();
}

std::unique_ptr<RollingFit> LinearRegressionModel::rolling_fit(const Dataset& data) const {
    return std::make_unique<RollingRegression>(data);
}

// --- INARCH(1) --------------------------------------------------------------

namespace {

using Point = std::array<double, 2>;

constexpr Point kLower{InarchModel::kInterceptMin, InarchModel::kSlopeMin};
constexpr Point kUpper{InarchModel::kInterceptMax, InarchModel::kSlopeMax};

Point project(Point t) {
    for (std::size_t j = 0; j < 2; ++j) {
        t[j] = std::clamp(t[j], kLower[j], kUpper[j]);
    }
    return t;
}

// Negative partial log-likelihood f(theta) = sum (lambda_i - X_i log lambda_i)
// on a window; its gradient is half the score sum.
class InarchObjective {
public:
    InarchObjective(const Dataset& data, Window w) : data_(data), w_(w) {}

    double value(const Point& t) const {
        double f = 0.0;
        for (std::size_t i = w_.begin; i < w_.end; ++i) {
            const double lambda = t[0] + t[1] * lag(i);
            const double x = data_.y(i);
            f += lambda - (x > 0.0 ? x * std::log(lambda) : 0.0);
        }
        return f;
    }

    // Gradient g = sum Xv (1 - X / lambda) and Hessian sum X Xv Xv' / lambda^2.
    void derivatives(const Point& t, Point& g, std::array<double, 3>& h) const {
        g = {0.0, 0.0};
        h = {0.0, 0.0, 0.0};
        for (std::size_t i = w_.begin; i < w_.end; ++i) {
            const double l = lag(i);
            const double lambda = t[0] + t[1] * l;
            const double x = data_.y(i);
            const double r = 1.0 - x / lambda;
            g[0] += r;
            g[1] += r * l;
            const double c = x / (lambda * lambda);
            h[0] += c;
            h[1] += c * l;
            h[2] += c * l * l;
        }
    }

    Point gradient(const Point& t) const {
        Point g;
        std::array<double, 3> h;
        derivatives(t, g, h);
        return g;
    }

private:
    double lag(std::size_t i) const { return data_.covariates()(static_cast<Eigen::Index>(i), 1); }

    const Dataset& data_;
    Window w_;
};

// Norm of the score sum restricted to coordinates not held at a bound by the
// sign of the gradient (KKT residual of the box-constrained problem).
double kkt_residual(const Point& t, const Point& g, std::array<bool, 2>* active = nullptr) {
    double r2 = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        const bool at_lower = t[j] <= kLower[j] && g[j] > 0.0;
        const bool at_upper = t[j] >= kUpper[j] && g[j] < 0.0;
        const bool is_active = at_lower || at_upper;
        if (active != nullptr) {
            (*active)[j] = is_active;
        }
        if (!is_active) {
            r2 += 4.0 * g[j] * g[j];
        }
    }
    return std::sqrt(r2);
}

Point moment_start(const Dataset& data, Window w) {
    double mx = 0.0;
    double ml = 0.0;
    for (std::size_t i = w.begin; i < w.end; ++i) {
        mx += data.y(i);
        ml += data.covariates()(static_cast<Eigen::Index>(i), 1);
    }
    const double n = static_cast<double>(w.size());
    mx /= n;
    ml /= n;
    double sxl = 0.0;
    double sll = 0.0;
    for (std::size_t i = w.begin; i < w.end; ++i) {
        const double dl = data.covariates()(static_cast<Eigen::Index>(i), 1) - ml;
        sxl += (data.y(i) - mx) * dl;
        sll += dl * dl;
    }
    const double slope = std::clamp(sll > 0.0 ? sxl / sll : 0.0, 0.05, 0.95);
    const double intercept = std::max(mx - slope * ml, 0.1 * std::max(mx, 1e-2));
    return project({intercept, slope});
}

// Nelder-Mead on the squared score norm, vertices projected onto the box.
Point nelder_mead(const InarchObjective& obj, Point start, int max_iter) {
    auto cost = [&](const Point& t) {
        const Point g = obj.gradient(t);
        return 4.0 * (g[0] * g[0] + g[1] * g[1]);
    };
    std::array<Point, 3> v{start, project({start[0] * 1.1 + 0.05, start[1]}),
                           project({start[0], start[1] + (start[1] < 0.5 ? 0.05 : -0.05)})};
    std::array<double, 3> c{cost(v[0]), cost(v[1]), cost(v[2])};
    for (int it = 0; it < max_iter; ++it) {
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return c[a] < c[b]; });
        const Point best = v[order[0]];
        const Point mid = v[order[1]];
        const Point worst = v[order[2]];
        const Point centroid{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
        auto along = [&](double s) {
            return project({centroid[0] + s * (worst[0] - centroid[0]),
                            centroid[1] + s * (worst[1] - centroid[1])});
        };
        const Point reflected = along(-1.0);
        const double cr = cost(reflected);
        if (cr < c[order[0]]) {
            const Point expanded = along(-2.0);
            const double ce = cost(expanded);
            v[order[2]] = ce < cr ? expanded : reflected;
            c[order[2]] = std::min(ce, cr);
        } else if (cr < c[order[1]]) {
            v[order[2]] = reflected;
            c[order[2]] = cr;
        } else {
            const Point contracted = along(0.5);
            const double cc = cost(contracted);
            if (cc < c[order[2]]) {
                v[order[2]] = contracted;
                c[order[2]] = cc;
            } else {
                for (int k : {order[1], order[2]}) {
                    v[k] = project({0.5 * (v[k][0] + best[0]), 0.5 * (v[k][1] + best[1])});
                    c[k] = cost(v[k]);
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin());
    return v[best];
}

} // namespace

void InarchModel::check_compatible(const Dataset& data) const {
    require_univariate(name(), data);
    if (data.covariate_dim() != 2) {
        throw UsageError(name() + ": expects lag-augmented samples (1, X_{i-1})");
    }
}

void InarchModel::score(SampleView x, const Vector& theta, Eigen::Ref<Vector> out) const {
    require_dims(name(), theta, 2);
    const double lag = x.covariates[1];
    const double lambda = theta(0) + theta(1) * lag;
    if (!(lambda > 0.0)) {
        throw DomainError("inarch: non-positive intensity");
    }
    const double r = -2.0 * (x.response[0] / lambda - 1.0);
    out(0) = r;
    out(1) = r * lag;
}

void InarchModel::jacobian(SampleView x, const Vector& theta, Eigen::Ref<Matrix> out) const {
    require_dims(name(), theta, 2);
    const double lag = x.covariates[1];
    const double lambda = theta(0) + theta(1) * lag;
    if (!(lambda > 0.0)) {
        throw DomainError("inarch: non-positive intensity");
    }
    const double c = 2.0 * x.response[0] / (lambda * lambda);
    out(0, 0) = c;
    out(0, 1) = c * lag;
    out(1, 0) = c * lag;
    out(1, 1) = c * lag * lag;
}

Vector InarchModel::fit(const Dataset& data, Window w, const Vector* warm_start) const {
    check_window(data, w);
    double total = 0.0;
    double lag_min = std::numeric_limits<double>::infinity();
    double lag_max = -lag_min;
    for (std::size_t i = w.begin; i < w.end; ++i) {
        total += data.y(i);
        const double l = data.covariates()(static_cast<Eigen::Index>(i), 1);
        lag_min = std::min(lag_min, l);
        lag_max = std::max(lag_max, l);
    }
    if (total <= 0.0) {
        throw SingularFit("inarch: window has no positive counts");
    }
    if (lag_min == lag_max) {
        throw SingularFit("inarch: lagged values are constant on the window");
    }

    const InarchObjective obj(data, w);
    const double tol = kFitTolerance * static_cast<double>(w.size());
    Point t = warm_start != nullptr && warm_start->size() == 2
                  ? project({(*warm_start)(0), (*warm_start)(1)})
                  : moment_start(data, w);

    Point g;
    std::array<double, 3> h;
    std::array<bool, 2> active{};
    for (int it = 0; it < kMaxIterations; ++it) {
        obj.derivatives(t, g, h);
        const double res = kkt_residual(t, g, &active);
        if (res <= tol) {
            return Vector{{t[0], t[1]}};
        }
        // Newton direction on the free coordinates, steepest descent when the
        // reduced Hessian is not positive definite.
        Point d{0.0, 0.0};
        if (!active[0] && !active[1]) {
            const double det = h[0] * h[2] - h[1] * h[1];
            if (det > 1e-14 * h[0] * h[2] && h[0] > 0.0) {
                d[0] = -(h[2] * g[0] - h[1] * g[1]) / det;
                d[1] = -(-h[1] * g[0] + h[0] * g[1]) / det;
            } else {
                d = {-g[0], -g[1]};
            }
        } else {
            for (std::size_t j = 0; j < 2; ++j) {
                if (!active[j]) {
                    const double hjj = j == 0 ? h[0] : h[2];
                    d[j] = hjj > 0.0 ? -g[j] / hjj : -g[j];
                }
            }
        }

        const double f0 = obj.value(t);
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            const Point cand = project({t[0] + step * d[0], t[1] + step * d[1]});
            const double decrease = g[0] * (cand[0] - t[0]) + g[1] * (cand[1] - t[1]);
            const double f1 = obj.value(cand);
            if (f1 <= f0 + 1e-4 * decrease || kkt_residual(cand, obj.gradient(cand)) < res) {
                accepted = cand != t;
                t = cand;
                break;
            }
        }
        if (!accepted) {
            break;
        }
    }

    // Fallback: derivative-free search from the last Newton iterate.
    t = nelder_mead(obj, t, kMaxIterations);
    obj.derivatives(t, g, h);
    const double res = kkt_residual(t, g);
    if (res <= tol) {
        return Vector{{t[0], t[1]}};
    }
    throw NonConvergence("inarch: fitter did not converge", Vector{{t[0], t[1]}}, res);
}

// --- free functions ---------------------------------------------------------

std::unique_ptr<EstimatingModel> make_model(const std::string& name, std::size_t dimension) {
    if (name == "mean") {
        return std::make_unique<MeanModel>();
    }
    if (name == "median-like") {
        return std::make_unique<MedianLikeModel>();
    }
    if (name == "median-like-sample") {
        return std::make_unique<MedianLikeModel>(MedianInspection::SampleMedian);
    }
    if (name == "sign-median") {
        return std::make_unique<SignMedianModel>();
    }
    if (name == "multimean") {
        if (dimension == 0) {
            throw UsageError("multimean: dimension required");
        }
        return std::make_unique<MultivariateMeanModel>(dimension);
    }
    if (name == "linreg") {
        if (dimension == 0) {
            throw UsageError("linreg: dimension required");
        }
        return std::make_unique<LinearRegressionModel>(dimension);
    }
    if (name == "inarch") {
        return std::make_unique<InarchModel>();
    }
    throw UsageError("unknown model '" + name + "'");
}

Vector eval_score(const EstimatingModel& model, const SampleTuple& sample, const Vector& theta) {
    Vector out(static_cast<Eigen::Index>(model.dimension()));
    model.score(sample.view(), theta, out);
    return out;
}

Matrix eval_jacobian(const EstimatingModel& model, const SampleTuple& sample, const Vector& theta) {
    const auto p = static_cast<Eigen::Index>(model.dimension());
    Matrix out(p, p);
    model.jacobian(sample.view(), theta, out);
    return out;
}

Matrix eval_v(const EstimatingModel& model, const Dataset& data, Window w, const Vector& theta) {
    if (w.empty() || w.end > data.size()) {
        throw UsageError("eval_v: window empty or out of range");
    }
    const auto p = static_cast<Eigen::Index>(model.dimension());
    Matrix acc = Matrix::Zero(p, p);
    Matrix j(p, p);
    for (std::size_t i = w.begin; i < w.end; ++i) {
        model.jacobian(data.view(i), theta, j);
        acc += j;
    }
    return acc / static_cast<double>(w.size());
}

Vector score_sum(const EstimatingModel& model, const Dataset& data, Window w, const Vector& theta) {
    const auto p = static_cast<Eigen::Index>(model.dimension());
    Vector acc = Vector::Zero(p);
    Vector h(p);
    for (std::size_t i = w.begin; i < w.end; ++i) {
        model.score(data.view(i), theta, h);
        acc += h;
    }
    return acc;
}

RowMatrix score_series(const EstimatingModel& model, const Dataset& data, const Vector& theta) {
    const auto p = static_cast<Eigen::Index>(model.dimension());
    RowMatrix out(static_cast<Eigen::Index>(data.size()), p);
    Vector h(p);
    for (std::size_t i = 0; i < data.size(); ++i) {
        model.score(data.view(i), theta, h);
        out.row(static_cast<Eigen::Index>(i)) = h.transpose();
    }
    return out;
}

double sample_median(const Dataset& data, Window w) {
    if (w.empty() || w.end > data.size()) {
        throw UsageError("sample_median: window empty or out of range");
    }
    std::vector<double> v = data.responses(w);
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

} // namespace mosumseg
