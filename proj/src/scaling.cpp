#include "mosumseg/scaling.hpp"

#include "mosumseg/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>

namespace mosumseg {

ScalingPolicy ScalingPolicy::known_matrix(Matrix m) {
    ScalingPolicy p;
    p.kind = ScalingKind::Known;
    p.known = std::move(m);
    return p;
}

ScalingPolicy ScalingPolicy::known_scalar(double v) {
    return known_matrix(Matrix::Constant(1, 1, v));
}

ScalingKind parse_scaling_kind(const std::string& name) {
    if (name == "known") return ScalingKind::Known;
    if (name == "s-global") return ScalingKind::ScoreGlobal;
    if (name == "s-local") return ScalingKind::ScoreLocal;
    if (name == "w-local") return ScalingKind::WaldLocal;
    if (name == "inarch-gamma") return ScalingKind::InarchGamma;
    if (name == "mosum-window") return ScalingKind::MosumWindowVariance;
    throw UsageError("unknown scaling '" + name + "'");
}

std::string to_string(ScalingKind kind) {
    switch (kind) {
    case ScalingKind::Known: return "known";
    case ScalingKind::ScoreGlobal: return "s-global";
    case ScalingKind::ScoreLocal: return "s-local";
    case ScalingKind::WaldLocal: return "w-local";
    case ScalingKind::InarchGamma: return "inarch-gamma";
    case ScalingKind::MosumWindowVariance: return "mosum-window";
    }
    return "unknown";
}

namespace {

void require_symmetric(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw UsageError("scaling: matrix must be square and non-empty");
    }
    if (!m.allFinite()) {
        throw SingularScaling("scaling: matrix has non-finite entries");
    }
    const double tol = 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) {
        throw UsageError("scaling: matrix must be symmetric");
    }
}

// Ridge to apply under the policy, or 0 when the matrix is well conditioned.
// Throws SingularScaling when the matrix is singular and no ridge is allowed.
double choose_ridge(const Eigen::VectorXd& eig, const Matrix& m, const ScalingPolicy& policy) {
    const double lmax = eig.maxCoeff();
    const double lmin = eig.minCoeff();
    if (lmax > 0.0 && lmin > 1e-12 * lmax) {
        return 0.0;
    }
    const double ridge = policy.allow_ridge
                             ? policy.ridge_factor * m.trace() / static_cast<double>(m.rows())
                             : 0.0;
    if (!(ridge > 0.0) || !(lmin + ridge > 0.0)) {
        throw SingularScaling("scaling: matrix is not positive definite");
    }
    return ridge;
}

Matrix design_covariance(const Dataset& data) {
    const auto& z = data.covariates();
    return (z.transpose() * z) / static_cast<double>(data.size());
}

void check_split(const Dataset& data, std::size_t k, std::size_t G) {
    if (G == 0 || k < G || k + G > data.size()) {
        throw UsageError("scaling: need G <= k <= n - G");
    }
}

// Centered outer-product sum of the rows of `h` over [b, e).
Matrix centered_scatter(const RowMatrix& h, std::size_t b, std::size_t e) {
    const auto rows = h.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b));
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    const RowMatrix c = rows.rowwise() - mean;
    return c.transpose() * c;
}

double centered_ss(const Vector& r, std::size_t b, std::size_t e) {
    const auto seg = r.segment(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b));
    return (seg.array() - seg.mean()).square().sum();
}

double mean_square_response(const Dataset& data, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) {
        s += data.y(i) * data.y(i);
    }
    return s / static_cast<double>(e - b);
}

// Residual variance at the level of rounding error counts as zero.
void require_residual_spread(double residual_variance, double response_mean_square) {
    if (!(residual_variance > 1e-20 * response_mean_square)) {
        throw SingularScaling("linreg: residual variance is zero (noiseless data)");
    }
}

Vector regression_residuals(const Dataset& data, const Vector& beta) {
    Vector y(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = data.y(i);
    }
    return y - data.covariates() * beta;
}

RowMatrix window_scores(const EstimatingModel& model, const Dataset& data, Window w,
                        const Vector& theta) {
    const auto p = static_cast<Eigen::Index>(model.dimension());
    RowMatrix out(static_cast<Eigen::Index>(w.size()), p);
    Vector h(p);
    for (std::size_t i = w.begin; i < w.end; ++i) {
        model.score(data.view(i), theta, h);
        out.row(static_cast<Eigen::Index>(i - w.begin)) = h.transpose();
    }
    return out;
}

} // namespace

Matrix inv_sqrt(const Matrix& m, double ridge) {
    require_symmetric(m);
    if (ridge < 0.0) {
        throw UsageError("inv_sqrt: ridge must be non-negative");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    const Eigen::VectorXd shifted = es.eigenvalues().array() + ridge;
    if (!(shifted.minCoeff() > 0.0)) {
        throw SingularScaling("inv_sqrt: matrix is not positive definite");
    }
    const Eigen::VectorXd d = shifted.array().rsqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

ScalingAtK make_scaling(std::size_t k, const Matrix& m, const ScalingPolicy& policy) {
    require_symmetric(m);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    const double ridge = choose_ridge(es.eigenvalues(), m, policy);
    const Eigen::VectorXd d = (es.eigenvalues().array() + ridge).rsqrt();
    ScalingAtK s;
    s.k = k;
    s.matrix = m;
    s.inv_sqrt = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
    s.ridged = ridge > 0.0;
    return s;
}

ScalingAtK make_scaling_from_precision(std::size_t k, const Matrix& precision,
                                       const ScalingPolicy& policy) {
    require_symmetric(precision);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(precision);
    const double ridge = choose_ridge(es.eigenvalues(), precision, policy);
    const Eigen::VectorXd lam = es.eigenvalues().array() + ridge;
    const auto& q = es.eigenvectors();
    ScalingAtK s;
    s.k = k;
    s.matrix = q * lam.cwiseInverse().asDiagonal() * q.transpose();
    s.inv_sqrt = q * lam.cwiseSqrt().asDiagonal() * q.transpose();
    s.ridged = ridge > 0.0;
    return s;
}

ScalingAtK score_cov_local(const Dataset& data, const EstimatingModel& model,
                           const Vector& theta_tilde, std::size_t k, std::size_t G,
                           const ScalingPolicy& policy) {
    check_split(data, k, G);
    const double scale = 1.0 / (2.0 * static_cast<double>(G));
    if (model.kind() == ModelKind::LinearRegression) {
        const Vector r = regression_residuals(data, theta_tilde);
        const double v2 = scale * (centered_ss(r, k - G, k) + centered_ss(r, k, k + G));
        require_residual_spread(v2, mean_square_response(data, k - G, k + G));
        return make_scaling(k, 4.0 * v2 * design_covariance(data), policy);
    }
    const RowMatrix h = window_scores(model, data, {k - G, k + G}, theta_tilde);
    const Matrix cov = scale * (centered_scatter(h, 0, G) + centered_scatter(h, G, 2 * G));
    return make_scaling(k, cov, policy);
}

ScalingAtK score_cov_global(const Dataset& data, const EstimatingModel& model,
                            const Vector& theta_tilde, const ScalingPolicy& policy) {
    const std::size_t n = data.size();
    if (n < 2) {
        throw UsageError("score_cov_global: need at least two samples");
    }
    const double scale = 1.0 / static_cast<double>(n - 1);
    if (model.kind() == ModelKind::LinearRegression) {
        const Vector r = regression_residuals(data, theta_tilde);
        const double v1 = scale * r.squaredNorm();
        require_residual_spread(v1, mean_square_response(data, 0, n));
        return make_scaling(0, 4.0 * v1 * design_covariance(data), policy);
    }
    const RowMatrix h = score_series(model, data, theta_tilde);
    return make_scaling(0, scale * centered_scatter(h, 0, n), policy);
}

ScalingAtK wald_local_gamma(const Dataset& data, const EstimatingModel& model, std::size_t k,
                            std::size_t G, const Vector& theta_left, const Vector& theta_right,
                            const ScalingPolicy& policy) {
    check_split(data, k, G);
    const double scale = 1.0 / (2.0 * static_cast<double>(G));
    const Window left{k - G, k};
    const Window right{k, k + G};

    if (model.kind() == ModelKind::LinearRegression) {
        const double ss = (regression_residuals(data.slice(left), theta_left).squaredNorm() +
                           regression_residuals(data.slice(right), theta_right).squaredNorm());
        const double v3 = scale * ss;
        require_residual_spread(v3, mean_square_response(data, k - G, k + G));
        const Matrix c = design_covariance(data);
        const Eigen::FullPivLU<Matrix> lu(c);
        if (!lu.isInvertible()) {
            throw SingularScaling("w-local: regressor covariance is singular");
        }
        Matrix gamma = v3 * lu.inverse();
        gamma = 0.5 * (gamma + gamma.transpose());
        return make_scaling(k, gamma, policy);
    }

    const Matrix v = 0.5 * (eval_v(model, data, left, theta_left) + eval_v(model, data, right, theta_right));
    const Eigen::FullPivLU<Matrix> lu(v);
    if (!lu.isInvertible()) {
        throw SingularScaling("w-local: V is singular");
    }
    const RowMatrix hl = window_scores(model, data, left, theta_left);
    const RowMatrix hr = window_scores(model, data, right, theta_right);
    const Matrix sigma = scale * (centered_scatter(hl, 0, G) + centered_scatter(hr, 0, G));
    const Matrix vinv = lu.inverse();
    Matrix gamma = vinv * sigma * vinv.transpose();
    gamma = 0.5 * (gamma + gamma.transpose());
    return make_scaling(k, gamma, policy);
}

ScalingAtK inarch_gamma(const Dataset& data, std::size_t k, std::size_t G,
                        const Vector& theta_left, const Vector& theta_right,
                        const ScalingPolicy& policy) {
    check_split(data, k, G);
    if (data.covariate_dim() != 2) {
        throw UsageError("inarch-gamma: expects lag-augmented samples");
    }
    auto information = [&](Window w, const Vector& theta) {
        Matrix acc = Matrix::Zero(2, 2);
        for (std::size_t i = w.begin; i < w.end; ++i) {
            const double lag = data.covariates()(static_cast<Eigen::Index>(i), 1);
            const double y = data.y(i);
            const double lambda = theta(0) + theta(1) * lag;
            if (!(lambda > 0.0)) {
                throw DomainError("inarch-gamma: non-positive intensity");
            }
            const double c = y / (lambda * lambda);
            acc(0, 0) += c;
            acc(0, 1) += c * lag;
            acc(1, 1) += c * lag * lag;
        }
        acc(1, 0) = acc(0, 1);
        return Matrix(acc / static_cast<double>(G));
    };
    const Matrix precision =
        0.5 * (information({k - G, k}, theta_left) + information({k, k + G}, theta_right));
    return make_scaling_from_precision(k, precision, policy);
}

double mosum_window_variance(std::span<const double> series, std::size_t k, std::size_t G) {
    if (G == 0 || k < G || k + G > series.size()) {
        throw UsageError("mosum_window_variance: need G <= k <= n - G");
    }
    auto ss = [&](std::size_t b) {
        double mean = 0.0;
        for (std::size_t i = b; i < b + G; ++i) {
            mean += series[i];
        }
        mean /= static_cast<double>(G);
        double s = 0.0;
        for (std::size_t i = b; i < b + G; ++i) {
            s += (series[i] - mean) * (series[i] - mean);
        }
        return s / static_cast<double>(G);
    };
    const double v = 0.5 * (ss(k - G) + ss(k));
    if (!(v > 0.0)) {
        throw SingularScaling("mosum_window_variance: both windows are constant");
    }
    return v;
}

// --- rolling provider ---------------------------------------------------------

ScoreScalingSeries::ScoreScalingSeries(const Dataset& data, const EstimatingModel& model,
                                       const Vector& theta_tilde, const RowMatrix& scores,
                                       std::size_t G, ScalingPolicy policy)
    : data_(data), scores_(scores), G_(G), policy_(std::move(policy)) {
    const auto p = static_cast<Eigen::Index>(model.dimension());
    switch (policy_.kind) {
    case ScalingKind::Known:
        if (policy_.known.rows() != p || policy_.known.cols() != p) {
            throw UsageError("known scaling: matrix dimension differs from model dimension");
        }
        constant_ = make_scaling(0, policy_.known, policy_);
        return;
    case ScalingKind::ScoreGlobal:
        constant_ = score_cov_global(data, model, theta_tilde, policy_);
        return;
    case ScalingKind::MosumWindowVariance:
        if (p != 1) {
            throw UsageError("mosum-window scaling needs a one-dimensional score");
        }
        break;
    case ScalingKind::ScoreLocal:
        break;
    case ScalingKind::WaldLocal:
    case ScalingKind::InarchGamma:
        throw UsageError(to_string(policy_.kind) + " scaling applies to the Wald statistic only");
    }

    regression_ = model.kind() == ModelKind::LinearRegression && policy_.kind == ScalingKind::ScoreLocal;
    if (regression_) {
        residuals_ = regression_residuals(data, theta_tilde);
        design_cov_ = 4.0 * design_covariance(data);
        centered_ = residuals_.array() - residuals_.mean();
        response_sq_prefix_.assign(data.size() + 1, 0.0);
        for (std::size_t i = 0; i < data.size(); ++i) {
            response_sq_prefix_[i + 1] = response_sq_prefix_[i] + data.y(i) * data.y(i);
        }
    } else {
        centered_ = scores_.rowwise() - scores_.colwise().mean();
    }
    const Eigen::Index w = centered_.cols();
    sum_left_ = Vector::Zero(w);
    sum_right_ = Vector::Zero(w);
    outer_left_ = Matrix::Zero(w, w);
    outer_right_ = Matrix::Zero(w, w);
    for (std::size_t i = 0; i < G_; ++i) {
        const auto a = centered_.row(static_cast<Eigen::Index>(i)).transpose();
        const auto b = centered_.row(static_cast<Eigen::Index>(i + G_)).transpose();
        sum_left_ += a;
        outer_left_.noalias() += a * a.transpose();
        sum_right_ += b;
        outer_right_.noalias() += b * b.transpose();
    }
    current_k_ = G_;
}

void ScoreScalingSeries::advance_to(std::size_t k) {
    if (k < current_k_ || k + G_ > data_.size()) {
        throw UsageError("score scaling: k must advance within [G, n - G]");
    }
    while (current_k_ < k) {
        const std::size_t c = current_k_;
        const auto out_left = centered_.row(static_cast<Eigen::Index>(c - G_)).transpose();
        const auto mid = centered_.row(static_cast<Eigen::Index>(c)).transpose();
        const auto in_right = centered_.row(static_cast<Eigen::Index>(c + G_)).transpose();
        sum_left_ += mid - out_left;
        outer_left_.noalias() += mid * mid.transpose() - out_left * out_left.transpose();
        sum_right_ += in_right - mid;
        outer_right_.noalias() += in_right * in_right.transpose() - mid * mid.transpose();
        ++current_k_;
    }
}

ScalingAtK ScoreScalingSeries::at(std::size_t k) {
    if (constant_) {
        ScalingAtK s = *constant_;
        s.k = k;
        return s;
    }
    advance_to(k);
    const double g = static_cast<double>(G_);
    const Matrix scatter = (outer_left_ - sum_left_ * sum_left_.transpose() / g) +
                           (outer_right_ - sum_right_ * sum_right_.transpose() / g);
    const Matrix cov = scatter / (2.0 * g);
    if (regression_) {
        const double response_ms = (response_sq_prefix_[k + G_] - response_sq_prefix_[k - G_]) / (2.0 * g);
        require_residual_spread(cov(0, 0), response_ms);
        return make_scaling(k, cov(0, 0) * design_cov_, policy_);
    }
    return make_scaling(k, 0.5 * (cov + cov.transpose()), policy_);
}

} // namespace mosumseg
