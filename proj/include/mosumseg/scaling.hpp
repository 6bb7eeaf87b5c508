#pragma once

#include "mosumseg/dataset.hpp"
#include "mosumseg/estimators.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mosumseg {

enum class ScalingKind {
    Known,               // fixed user matrix (Sigma for score, Gamma for Wald)
    ScoreGlobal,         // full-sample score covariance at the inspection parameter
    ScoreLocal,          // two-window score covariance at the inspection parameter
    WaldLocal,           // two-window V^-1 Sigma V^-T at the local fits
    InarchGamma,         // averaged two-window INARCH information, inverted
    MosumWindowVariance, // average of the two within-window variances (p = 1)
};

struct ScalingPolicy {
    ScalingKind kind{ScalingKind::ScoreLocal};
    Matrix known;              // used by Known
    double ridge_factor{1e-10}; // ridge = ridge_factor * trace / p
    bool allow_ridge{true};

    static ScalingPolicy known_matrix(Matrix m);
    static ScalingPolicy known_scalar(double v);
};

// Parses ScalingKind from its CLI name (known, s-global, s-local, w-local,
// inarch-gamma, mosum-window).
ScalingKind parse_scaling_kind(const std::string& name);
std::string to_string(ScalingKind kind);

// A validated scaling matrix at time k with its cached inverse square root.
// `ridged` is set when the matrix was numerically singular and the ridge
// made it invertible.
struct ScalingAtK {
    std::size_t k{0};
    Matrix matrix;
    Matrix inv_sqrt;
    bool ridged{false};
};

// Q (Lambda + ridge I)^{-1/2} Q' for symmetric M = Q Lambda Q'.
// Throws SingularScaling if an eigenvalue is <= 0 after the ridge.
Matrix inv_sqrt(const Matrix& m, double ridge = 0.0);

// Validates a covariance-type matrix under the policy's ridge rule.
ScalingAtK make_scaling(std::size_t k, const Matrix& m, const ScalingPolicy& policy = {});

// Same, for a precision (inverse covariance) matrix P: matrix = P^-1,
// inv_sqrt = P^{1/2}.
ScalingAtK make_scaling_from_precision(std::size_t k, const Matrix& precision,
                                       const ScalingPolicy& policy = {});

// Two-window centered covariance of the scores at theta_tilde,
//   (1/2G) [sum_left (H - Hbar_L)(H - Hbar_L)' + sum_right (H - Hbar_R)(...)'],
// with left = samples (k-G, k], right = (k, k+G] (one-based). For linear
// regression the residual-variance form v2 * 4 * (1/n) sum Z Z' is used.
ScalingAtK score_cov_local(const Dataset& data, const EstimatingModel& model,
                           const Vector& theta_tilde, std::size_t k, std::size_t G,
                           const ScalingPolicy& policy = {});

// Full-sample analogue: (1/(n-1)) sum (H - Hbar)(H - Hbar)'; linear regression
// uses v1 * 4 * (1/n) sum Z Z'.
ScalingAtK score_cov_global(const Dataset& data, const EstimatingModel& model,
                            const Vector& theta_tilde, const ScalingPolicy& policy = {});

// Wald scaling Gamma_k from the local fits. Linear regression:
// v3 * ((1/n) sum Z Z')^-1 with v3 the pooled two-window residual MSE.
// Other models: V^-1 Sigma V^-T with V the average of the two window Jacobian
// means and Sigma the two-window score covariance, each window at its own fit.
ScalingAtK wald_local_gamma(const Dataset& data, const EstimatingModel& model, std::size_t k,
                            std::size_t G, const Vector& theta_left, const Vector& theta_right,
                            const ScalingPolicy& policy = {});

// INARCH(1) Wald scaling: Gamma^-1 = (Gamma_L^-1 + Gamma_R^-1) / 2 with
//   Gamma_{l,u}^-1 = (1/G) sum 1/lambda_i^2 [[Y, Y Y_-1], [Y Y_-1, Y Y_-1^2]].
ScalingAtK inarch_gamma(const Dataset& data, std::size_t k, std::size_t G,
                        const Vector& theta_left, const Vector& theta_right,
                        const ScalingPolicy& policy = {});

// Average of the left and right within-window variances (denominator G).
// Throws SingularScaling when both are zero.
double mosum_window_variance(std::span<const double> series, std::size_t k, std::size_t G);

// Score-statistic scaling along k = G, G+1, ... with rolling window sums.
// at(k) must be called with consecutive k starting at G.
class ScoreScalingSeries {
public:
    ScoreScalingSeries(const Dataset& data, const EstimatingModel& model, const Vector& theta_tilde,
                       const RowMatrix& scores, std::size_t G, ScalingPolicy policy);

    ScalingAtK at(std::size_t k);

private:
    void advance_to(std::size_t k);

    const Dataset& data_;
    const RowMatrix& scores_;
    std::size_t G_;
    ScalingPolicy policy_;
    bool regression_{false};
    std::optional<ScalingAtK> constant_;
    // Regression: residuals at theta_tilde and 4 (1/n) sum Z Z'.
    Vector residuals_;
    Matrix design_cov_;
    std::vector<double> response_sq_prefix_;
    // Rolling sums of centered scores (or residuals) and their outer products.
    RowMatrix centered_;
    Vector sum_left_, sum_right_;
    Matrix outer_left_, outer_right_;
    std::size_t current_k_{0};
};

} // namespace mosumseg
