#pragma once

#include "mosumseg/dataset.hpp"
#include "mosumseg/segmenter.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mosumseg {

enum class ScenarioKind { MeanChange, LinReg, Inarch };

// Piecewise-stationary generator. change_points[j] is the number of
// observations before the (j+1)-th change; segment j uses segment_params[j]:
// a 1-vector mean, a regression coefficient vector (intercept first), or an
// INARCH(1) pair (intercept, slope).
struct Scenario {
    ScenarioKind kind{ScenarioKind::MeanChange};
    std::size_t n{0};
    std::vector<std::size_t> change_points;
    std::vector<Vector> segment_params;
    double noise_sd{1.0};  // MeanChange / LinReg; 0 gives a noiseless series
    std::vector<double> regressor_means{1.0, 2.0};  // LinReg, unit variance each
    std::size_t burn_in{500};  // Inarch, under the first segment's parameters

    // Throws UsageError on inconsistent fields.
    void validate() const;
};

struct SimulatedSeries {
    ScenarioKind kind{ScenarioKind::MeanChange};
    std::vector<double> values;  // response (or counts) X_1..X_n
    RowMatrix regressors;        // LinReg: n x m, no intercept column
    double initial{0.0};         // Inarch: X_0, the last burn-in draw

    Dataset dataset() const;
};

SimulatedSeries gen_mean_change(const Scenario& scenario, std::uint64_t seed);
SimulatedSeries gen_linreg(const Scenario& scenario, std::uint64_t seed);
SimulatedSeries gen_inarch(const Scenario& scenario, std::uint64_t seed);
SimulatedSeries generate(const Scenario& scenario, std::uint64_t seed);

// splitmix64(master ^ splitmix64(r)).
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r);

// Worker count: MOSUMSEG_THREADS if set and positive, else the hardware
// concurrency, never more than `jobs`.
std::size_t worker_count(std::size_t jobs);

struct MethodConfig {
    std::string label;
    std::string model;  // make_model name
    SegmentConfig segment;
    bool recursive{false};
};

struct ReplicationOutcome {
    bool failed{false};
    std::string error;
    std::size_t q_hat{0};
    std::vector<std::size_t> estimates;  // change locations in observation units
};

struct StudyReport {
    std::string label;
    std::size_t G{0};
    std::size_t replications{0};
    std::size_t failures{0};
    std::vector<std::size_t> true_changes;
    std::vector<std::pair<std::size_t, std::size_t>> detection_intervals;  // inclusive
    std::vector<std::string> qhat_bins;
    std::vector<double> qhat_distribution;  // over successful replications
    std::vector<double> detection_rates;    // per true change
    std::vector<ReplicationOutcome> outcomes;  // indexed by replication
    double runtime_seconds{0.0};

    // Fraction of successful replications with q_hat == q.
    double fraction_with(std::size_t q) const;
};

// Histogram labels around q: "<=q-2", "q-1", "q", "q+1", ">=q+2" (the first
// collapses to "<=0" etc. for small q).
std::vector<std::string> qhat_bin_labels(std::size_t q);

struct StudyOptions {
    std::size_t replications{100};
    std::uint64_t master_seed{1};
    std::size_t threads{0};  // 0: worker_count
    std::size_t detection_radius{20};
    // Per-change inclusive intervals; empty means [k - radius, k + radius].
    std::vector<std::pair<std::size_t, std::size_t>> detection_intervals;
    // Fraction of failed replications above which the study throws.
    double max_failure_fraction{0.01};
};

// Runs the method on `replications` independent draws of the scenario.
// Outcomes are stored by replication index, so the report does not depend
// on the number of workers.
StudyReport run_study(const Scenario& scenario, const MethodConfig& method, const StudyOptions& options);

// One row of a named study table.
struct StudyRow {
    Scenario scenario;
    MethodConfig method;
    std::vector<std::pair<std::size_t, std::size_t>> detection_intervals;
};

// Rows for "table1", "table2", "table3" at bandwidth G. `estimator`
// selects a variant where one exists ("" for the default; table1 accepts
// "median-like" for the M-estimator inspection parameter). Throws
// UsageError for unknown names.
std::vector<StudyRow> study_rows(const std::string& table, std::size_t G, const std::string& estimator = "");

Scenario table1_scenario();
Scenario table2_scenario();
Scenario table3_scenario();

// Deterministic outputs (runtime is not written).
void write_study_csv(std::ostream& os, const std::vector<StudyReport>& reports);
void write_study_table(std::ostream& os, const std::vector<StudyReport>& reports);

struct CalibrationOptions {
    std::size_t n{2000};
    std::size_t G{200};
    std::string model{"mean"};
    ScalingPolicy scaling{};
    std::size_t replications{500};
    std::uint64_t master_seed{1};
    std::size_t threads{0};
    std::vector<double> alphas{0.01, 0.05, 0.10, 0.20};
};

struct CalibrationReport {
    std::size_t n{0};
    std::size_t G{0};
    std::vector<double> normed_maxima;  // a(n/G) max T - b(n/G), by replication
    double ks_distance{0.0};            // against exp(-2 exp(-x))
    std::vector<double> alphas;
    std::vector<double> thresholds;
    std::vector<double> exceedance;     // fraction of max T >= D(alpha)
    std::vector<double> false_alarm;    // fraction with q_hat >= 1 at D(alpha)
};

// Null study with the score statistic and global inspection parameter on a
// single-regime series: i.i.d. N(0,1) for the location models, linear
// regression with beta = (1, 1, 1), or INARCH(1) with theta = (1, 0.5).
CalibrationReport run_calibration(const CalibrationOptions& options);

// sup_x |F_emp(x) - F(x)| for the limit law.
double ks_distance_to_limit(std::vector<double> sample);

void write_calibration_csv(std::ostream& os, const CalibrationReport& report);

} // namespace mosumseg
