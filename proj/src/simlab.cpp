#include "mosumseg/simlab.hpp"

#include "mosumseg/errors.hpp"
#include "mosumseg/estimators.hpp"
#include "mosumseg/threshold.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace mosumseg {

namespace {

std::size_t expected_dimension(const Scenario& s) {
    switch (s.kind) {
    case ScenarioKind::MeanChange:
        return 1;
    case ScenarioKind::LinReg:
        return s.regressor_means.size() + 1;
    case ScenarioKind::Inarch:
        return 2;
    }
    return 0;
}

// Segment index of each observation position.
std::vector<std::size_t> regime_of(const Scenario& s) {
    std::vector<std::size_t> regime(s.n);
    std::size_t j = 0;
    for (std::size_t t = 0; t < s.n; ++t) {
        while (j < s.change_points.size() && t >= s.change_points[j]) {
            ++j;
        }
        regime[t] = j;
    }
    return regime;
}

// Runs body(i) for i in [0, jobs) on `threads` workers.
template <class Body>
void parallel_for(std::size_t jobs, std::size_t threads, Body body) {
    threads = std::max<std::size_t>(1, std::min(threads, jobs));
    if (threads == 1) {
        for (std::size_t i = 0; i < jobs; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < jobs; i = next++) {
                body(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

void Scenario::validate() const {
    if (n < 2) {
        throw UsageError("scenario: n must be at least 2");
    }
    for (std::size_t j = 0; j < change_points.size(); ++j) {
        if (change_points[j] == 0 || change_points[j] >= n ||
            (j > 0 && change_points[j] <= change_points[j - 1])) {
            throw UsageError("scenario: change points must be strictly increasing within (0, n)");
        }
    }
    if (segment_params.size() != change_points.size() + 1) {
        throw UsageError("scenario: need one parameter vector per segment");
    }
    const auto p = static_cast<Eigen::Index>(expected_dimension(*this));
    for (std::size_t j = 0; j < segment_params.size(); ++j) {
        if (segment_params[j].size() != p) {
            throw UsageError("scenario: segment parameter has wrong dimension");
        }
        if (j > 0 && segment_params[j] == segment_params[j - 1]) {
            throw UsageError("scenario: adjacent segments must differ");
        }
        if (kind == ScenarioKind::Inarch) {
            const double intercept = segment_params[j](0);
            const double slope = segment_params[j](1);
            if (!(slope < 1.0)) {
                throw UsageError("scenario: INARCH slope must be < 1");
            }
            if (!(intercept > 0.0) || slope < 0.0) {
                throw UsageError("scenario: INARCH needs intercept > 0 and slope >= 0");
            }
        }
    }
    if (!(noise_sd >= 0.0)) {
        throw UsageError("scenario: noise_sd must be non-negative");
    }
}

Dataset SimulatedSeries::dataset() const {
    switch (kind) {
    case ScenarioKind::MeanChange:
        return Dataset::univariate(values);
    case ScenarioKind::LinReg:
        return Dataset::regression(values, regressors);
    case ScenarioKind::Inarch:
        return Dataset::inarch(initial, values);
    }
    throw UsageError("unknown scenario kind");
}

SimulatedSeries gen_mean_change(const Scenario& scenario, std::uint64_t seed) {
    if (scenario.kind != ScenarioKind::MeanChange) {
        throw UsageError("gen_mean_change: scenario is not a mean-change scenario");
    }
    scenario.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto regime = regime_of(scenario);
    SimulatedSeries out;
    out.kind = ScenarioKind::MeanChange;
    out.values.resize(scenario.n);
    for (std::size_t t = 0; t < scenario.n; ++t) {
        out.values[t] = scenario.segment_params[regime[t]](0) + scenario.noise_sd * noise(rng);
    }
    return out;
}

SimulatedSeries gen_linreg(const Scenario& scenario, std::uint64_t seed) {
    if (scenario.kind != ScenarioKind::LinReg) {
        throw UsageError("gen_linreg: scenario is not a regression scenario");
    }
    scenario.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto regime = regime_of(scenario);
    const std::size_t m = scenario.regressor_means.size();
    SimulatedSeries out;
    out.kind = ScenarioKind::LinReg;
    out.values.resize(scenario.n);
    out.regressors.resize(static_cast<Eigen::Index>(scenario.n), static_cast<Eigen::Index>(m));
    for (std::size_t t = 0; t < scenario.n; ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        const Vector& beta = scenario.segment_params[regime[t]];
        double y = beta(0);
        for (std::size_t c = 0; c < m; ++c) {
            const double x = scenario.regressor_means[c] + normal(rng);
            out.regressors(row, static_cast<Eigen::Index>(c)) = x;
            y += beta(static_cast<Eigen::Index>(c + 1)) * x;
        }
        out.values[t] = y + scenario.noise_sd * normal(rng);
    }
    return out;
}

SimulatedSeries gen_inarch(const Scenario& scenario, std::uint64_t seed) {
    if (scenario.kind != ScenarioKind::Inarch) {
        throw UsageError("gen_inarch: scenario is not an INARCH scenario");
    }
    scenario.validate();
    std::mt19937_64 rng(seed);
    auto draw = [&rng](double lambda) {
        std::poisson_distribution<long long> poisson(lambda);
        return static_cast<double>(poisson(rng));
    };
    const Vector& first = scenario.segment_params.front();
    double x = first(0) / (1.0 - first(1));
    x = std::round(x);
    for (std::size_t t = 0; t < scenario.burn_in; ++t) {
        x = draw(first(0) + first(1) * x);
    }
    const auto regime = regime_of(scenario);
    SimulatedSeries out;
    out.kind = ScenarioKind::Inarch;
    out.initial = x;
    out.values.resize(scenario.n);
    for (std::size_t t = 0; t < scenario.n; ++t) {
        const Vector& theta = scenario.segment_params[regime[t]];
        x = draw(theta(0) + theta(1) * x);
        out.values[t] = x;
    }
    return out;
}

SimulatedSeries generate(const Scenario& scenario, std::uint64_t seed) {
    switch (scenario.kind) {
    case ScenarioKind::MeanChange:
        return gen_mean_change(scenario, seed);
    case ScenarioKind::LinReg:
        return gen_linreg(scenario, seed);
    case ScenarioKind::Inarch:
        return gen_inarch(scenario, seed);
    }
    throw UsageError("unknown scenario kind");
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) {
    return splitmix64(master ^ splitmix64(r));
}

std::size_t worker_count(std::size_t jobs) {
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MOSUMSEG_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            threads = static_cast<std::size_t>(v);
        }
    }
    return std::max<std::size_t>(1, std::min(threads, jobs));
}

double StudyReport::fraction_with(std::size_t q) const {
    std::size_t ok = 0;
    std::size_t hits = 0;
    for (const auto& o : outcomes) {
        if (!o.failed) {
            ++ok;
            hits += o.q_hat == q ? 1 : 0;
        }
    }
    return ok == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(ok);
}

std::vector<std::string> qhat_bin_labels(std::size_t q) {
    auto num = [](long v) { return std::to_string(v); };
    const long c = static_cast<long>(q);
    std::vector<std::string> labels;
    if (c >= 2) {
        labels.push_back("<=" + num(c - 2));
    }
    if (c >= 1) {
        labels.push_back(num(c - 1));
    }
    labels.push_back(num(c));
    labels.push_back(num(c + 1));
    labels.push_back(">=" + num(c + 2));
    return labels;
}

namespace {

std::size_t qhat_bin(std::size_t q_hat, std::size_t q) {
    const std::size_t low = q >= 2 ? 2 : q;  // bins below q
    const long offset = static_cast<long>(q_hat) - static_cast<long>(q);
    const long index = std::clamp(offset, -static_cast<long>(low), 2L) + static_cast<long>(low);
    return static_cast<std::size_t>(index);
}

} // namespace

StudyReport run_study(const Scenario& scenario, const MethodConfig& method, const StudyOptions& options) {
    scenario.validate();
    if (options.replications < 1) {
        throw UsageError("study: replications must be >= 1");
    }
    const std::size_t q = scenario.change_points.size();
    const auto model = make_model(method.model, expected_dimension(scenario) > 1 ? expected_dimension(scenario) : 0);

    StudyReport report;
    report.label = method.label;
    report.G = method.segment.scan.G;
    report.replications = options.replications;
    report.true_changes = scenario.change_points;
    if (!options.detection_intervals.empty()) {
        if (options.detection_intervals.size() != q) {
            throw UsageError("study: need one detection interval per change point");
        }
        report.detection_intervals = options.detection_intervals;
    } else {
        for (const std::size_t k : scenario.change_points) {
            const std::size_t r = options.detection_radius;
            report.detection_intervals.emplace_back(k > r ? k - r : 0, k + r);
        }
    }
    report.qhat_bins = qhat_bin_labels(q);
    report.outcomes.resize(options.replications);

    const auto start = std::chrono::steady_clock::now();
    const std::size_t threads = options.threads > 0 ? options.threads : worker_count(options.replications);
    parallel_for(options.replications, threads, [&](std::size_t r) {
        ReplicationOutcome& out = report.outcomes[r];
        try {
            const SimulatedSeries series = generate(scenario, replication_seed(options.master_seed, r));
            const Dataset data = series.dataset();
            const SegmentationResult res = method.recursive ? segment_recursive(data, *model, method.segment)
                                                            : segment(data, *model, method.segment);
            out.q_hat = res.q_hat;
            for (const auto& cp : res.changepoints) {
                out.estimates.push_back(cp.k + data.offset());
            }
        } catch (const Error& e) {
            out.failed = true;
            out.error = e.what();
        }
    });
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    report.qhat_distribution.assign(report.qhat_bins.size(), 0.0);
    report.detection_rates.assign(q, 0.0);
    std::size_t ok = 0;
    for (const auto& o : report.outcomes) {
        if (o.failed) {
            ++report.failures;
            continue;
        }
        ++ok;
        report.qhat_distribution[qhat_bin(o.q_hat, q)] += 1.0;
        for (std::size_t j = 0; j < q; ++j) {
            const auto [lo, hi] = report.detection_intervals[j];
            const bool hit = std::any_of(o.estimates.begin(), o.estimates.end(),
                                         [lo, hi](std::size_t k) { return k >= lo && k <= hi; });
            report.detection_rates[j] += hit ? 1.0 : 0.0;
        }
    }
    if (static_cast<double>(report.failures) > options.max_failure_fraction * static_cast<double>(options.replications)) {
        const auto first = std::find_if(report.outcomes.begin(), report.outcomes.end(),
                                        [](const ReplicationOutcome& o) { return o.failed; });
        throw NumericalError("study '" + method.label + "': " + std::to_string(report.failures) + " of " +
                             std::to_string(options.replications) + " replications failed (first: " +
                             first->error + ")");
    }
    if (ok > 0) {
        for (auto& v : report.qhat_distribution) {
            v /= static_cast<double>(ok);
        }
        for (auto& v : report.detection_rates) {
            v /= static_cast<double>(ok);
        }
    }
    return report;
}

Scenario table1_scenario() {
    Scenario s;
    s.kind = ScenarioKind::MeanChange;
    s.n = 1000;
    s.change_points = {100, 200, 600, 900};
    for (const double mu : {1.0, 2.0, 5.0, 3.0, 4.0}) {
        s.segment_params.push_back(Vector::Constant(1, mu));
    }
    return s;
}

Scenario table2_scenario() {
    Scenario s;
    s.kind = ScenarioKind::LinReg;
    s.n = 1000;
    s.change_points = {200, 500, 800};
    s.segment_params = {Vector{{1.0, 2.0, 2.0}}, Vector{{1.0, 1.0, 2.0}}, Vector{{2.0, 1.0, 2.0}},
                        Vector{{2.0, 1.0, 1.0}}};
    s.regressor_means = {1.0, 2.0};
    return s;
}

Scenario table3_scenario() {
    Scenario s;
    s.kind = ScenarioKind::Inarch;
    s.n = 1000;
    s.change_points = {250, 500, 750};
    s.segment_params = {Vector{{1.0, 0.5}}, Vector{{2.5, 0.5}}, Vector{{2.5, 0.2}}, Vector{{1.0, 0.5}}};
    return s;
}

std::vector<StudyRow> study_rows(const std::string& table, std::size_t G, const std::string& estimator) {
    auto method = [G](std::string label, std::string model, Statistic stat, Inspection insp, ScalingKind scaling) {
        MethodConfig m;
        m.label = std::move(label);
        m.model = std::move(model);
        m.segment.scan.G = G;
        m.segment.scan.statistic = stat;
        m.segment.scan.inspection = std::move(insp);
        m.segment.scan.scaling.kind = scaling;
        return m;
    };
    auto intervals_for = [](const Scenario& s) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const std::size_t k : s.change_points) {
            out.emplace_back(k - 20, k + 20);
        }
        return out;
    };

    std::vector<StudyRow> rows;
    if (table == "table1") {
        std::string model;
        if (estimator.empty() || estimator == "sample-median") {
            model = "median-like-sample";
        } else if (estimator == "median-like") {
            model = "median-like";
        } else {
            throw UsageError("table1: unknown estimator '" + estimator + "' (sample-median, median-like)");
        }
        const Scenario s = table1_scenario();
        rows.push_back({s, method("median 1..1000", model, Statistic::Score, Inspection::global(),
                                  ScalingKind::MosumWindowVariance),
                        intervals_for(s)});
        rows.push_back({s, method("median 1..200", model, Statistic::Score,
                                  Inspection::on_range(Window::inclusive(1, 200)), ScalingKind::MosumWindowVariance),
                        intervals_for(s)});
        return rows;
    }
    if (table == "table2") {
        const Scenario s = table2_scenario();
        rows.push_back({s, method("score s-global", "linreg", Statistic::Score, Inspection::global(),
                                  ScalingKind::ScoreGlobal), intervals_for(s)});
        rows.push_back({s, method("score s-local", "linreg", Statistic::Score, Inspection::global(),
                                  ScalingKind::ScoreLocal), intervals_for(s)});
        rows.push_back({s, method("wald w-local", "linreg", Statistic::Wald, Inspection::global(),
                                  ScalingKind::WaldLocal), intervals_for(s)});
    } else if (table == "table3") {
        const Scenario s = table3_scenario();
        rows.push_back({s, method("score theta 1..1000", "inarch", Statistic::Score, Inspection::global(),
                                  ScalingKind::ScoreLocal), intervals_for(s)});
        rows.push_back({s, method("score theta 300..700", "inarch", Statistic::Score,
                                  Inspection::on_range(Window::inclusive(300, 700)), ScalingKind::ScoreLocal),
                        intervals_for(s)});
        rows.push_back({s, method("wald", "inarch", Statistic::Wald, Inspection::global(),
                                  ScalingKind::InarchGamma), intervals_for(s)});
    } else {
        throw UsageError("unknown study '" + table + "' (table1, table2, table3)");
    }
    if (!estimator.empty()) {
        std::vector<StudyRow> picked;
        for (auto& r : rows) {
            if (r.method.label == estimator || r.method.label.rfind(estimator, 0) == 0 ||
                r.method.label.find(estimator) != std::string::npos) {
                picked.push_back(std::move(r));
            }
        }
        if (picked.empty()) {
            throw UsageError(table + ": no method matches '" + estimator + "'");
        }
        return picked;
    }
    return rows;
}

namespace {

std::string fixed3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

} // namespace

void write_study_csv(std::ostream& os, const std::vector<StudyReport>& reports) {
    os << "method,G,replications,failures,bin,kind,value\n";
    const auto old = os.precision(17);
    for (const auto& r : reports) {
        const std::string head = csv_field(r.label) + "," + std::to_string(r.G) + "," +
                                 std::to_string(r.replications) + "," + std::to_string(r.failures) + ",";
        for (std::size_t b = 0; b < r.qhat_bins.size(); ++b) {
            os << head << csv_field(r.qhat_bins[b]) << ",qhat," << r.qhat_distribution[b] << '\n';
        }
        for (std::size_t j = 0; j < r.detection_rates.size(); ++j) {
            const auto [lo, hi] = r.detection_intervals[j];
            os << head << '[' << lo << ';' << hi << "],detection," << r.detection_rates[j] << '\n';
        }
    }
    os.precision(old);
}

void write_study_table(std::ostream& os, const std::vector<StudyReport>& reports) {
    using Line = std::vector<std::string>;
    auto header_of = [](const StudyReport& r) {
        Line h{"method", "G"};
        for (const auto& b : r.qhat_bins) {
            h.push_back("q=" + b);
        }
        for (const auto& [lo, hi] : r.detection_intervals) {
            h.push_back("[" + std::to_string(lo) + "," + std::to_string(hi) + "]");
        }
        h.push_back("reps");
        return h;
    };
    auto cells_of = [](const StudyReport& r) {
        Line c{r.label, std::to_string(r.G)};
        for (const double v : r.qhat_distribution) {
            c.push_back(fixed3(v));
        }
        for (const double v : r.detection_rates) {
            c.push_back(fixed3(v));
        }
        c.push_back(std::to_string(r.replications - r.failures) + "/" + std::to_string(r.replications));
        return c;
    };
    auto print = [&os](const std::vector<Line>& lines) {
        std::vector<std::size_t> width(lines.front().size(), 0);
        for (const auto& l : lines) {
            for (std::size_t c = 0; c < l.size(); ++c) {
                width[c] = std::max(width[c], l[c].size());
            }
        }
        for (const auto& l : lines) {
            std::string row;
            for (std::size_t c = 0; c < l.size(); ++c) {
                std::string cell = l[c];
                cell.resize(width[c], ' ');
                row += (c == 0 ? "" : "  ") + cell;
            }
            row.erase(row.find_last_not_of(' ') + 1);
            os << row << '\n';
        }
    };

    // Consecutive reports with the same columns share one table.
    std::size_t i = 0;
    while (i < reports.size()) {
        const Line header = header_of(reports[i]);
        std::vector<Line> lines{header};
        for (; i < reports.size() && header_of(reports[i]) == header; ++i) {
            lines.push_back(cells_of(reports[i]));
        }
        print(lines);
        os << '\n';
    }
}

double ks_distance_to_limit(std::vector<double> sample) {
    if (sample.empty()) {
        throw UsageError("ks distance: empty sample");
    }
    std::sort(sample.begin(), sample.end());
    const double m = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = gumbel_cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    return d;
}

CalibrationReport run_calibration(const CalibrationOptions& options) {
    const auto model = make_model(options.model, options.model == "linreg" ? 3 : 0);
    Scenario null;
    null.n = options.n;
    switch (model->kind()) {
    case ModelKind::Mean:
    case ModelKind::MedianLike:
    case ModelKind::SignMedian:
        null.kind = ScenarioKind::MeanChange;
        null.segment_params = {Vector::Zero(1)};
        break;
    case ModelKind::LinearRegression:
        null.kind = ScenarioKind::LinReg;
        null.segment_params = {Vector::Ones(3)};
        break;
    case ModelKind::Inarch:
        null.kind = ScenarioKind::Inarch;
        null.segment_params = {Vector{{1.0, 0.5}}};
        break;
    default:
        throw UsageError("calibrate: unsupported model '" + options.model + "'");
    }
    if (options.replications < 1) {
        throw UsageError("calibrate: replications must be >= 1");
    }
    const EstimatingModel& used = *model;

    ScanConfig scan_config;
    scan_config.G = options.G;
    scan_config.statistic = Statistic::Score;
    scan_config.inspection = Inspection::global();
    scan_config.scaling = options.scaling;

    CalibrationReport report;
    report.n = options.n;
    report.G = options.G;
    report.alphas = options.alphas;
    const std::size_t p = used.dimension();
    ThresholdSpec spec;
    spec.n = options.n;
    spec.G = options.G;
    spec.p = p;
    for (const double a : options.alphas) {
        spec.alpha = a;
        report.thresholds.push_back(threshold(spec));
    }
    const Norming nm = norming(static_cast<double>(options.n) / static_cast<double>(options.G), p);

    std::vector<double> maxima(options.replications, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::vector<char>> alarms(options.replications);
    const std::size_t threads = options.threads > 0 ? options.threads : worker_count(options.replications);
    parallel_for(options.replications, threads, [&](std::size_t r) {
        const Dataset data = generate(null, replication_seed(options.master_seed, r)).dataset();
        const ScanResult s = scan(data, used, scan_config);
        double mx = -std::numeric_limits<double>::infinity();
        for (const double t : s.stats) {
            if (!std::isnan(t)) {
                mx = std::max(mx, t);
            }
        }
        maxima[r] = mx;
        for (const double D : report.thresholds) {
            alarms[r].push_back(find_exceedings(s.stats, s.first_k(), D, 0.2, s.G).empty() ? 0 : 1);
        }
    });

    const double reps = static_cast<double>(options.replications);
    for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
        std::size_t exceed = 0;
        std::size_t alarm = 0;
        for (std::size_t r = 0; r < options.replications; ++r) {
            exceed += maxima[r] >= report.thresholds[i] ? 1 : 0;
            alarm += alarms[r][i] != 0 ? 1 : 0;
        }
        report.exceedance.push_back(static_cast<double>(exceed) / reps);
        report.false_alarm.push_back(static_cast<double>(alarm) / reps);
    }
    for (const double m : maxima) {
        report.normed_maxima.push_back(nm.a * m - nm.b);
    }
    report.ks_distance = ks_distance_to_limit(report.normed_maxima);
    return report;
}

void write_calibration_csv(std::ostream& os, const CalibrationReport& report) {
    const auto old = os.precision(17);
    os << "kind,key,value\n";
    os << "summary,n," << report.n << '\n';
    os << "summary,G," << report.G << '\n';
    os << "summary,ks_distance," << report.ks_distance << '\n';
    for (std::size_t i = 0; i < report.alphas.size(); ++i) {
        os << "threshold," << report.alphas[i] << ',' << report.thresholds[i] << '\n';
        os << "exceedance," << report.alphas[i] << ',' << report.exceedance[i] << '\n';
        os << "false_alarm," << report.alphas[i] << ',' << report.false_alarm[i] << '\n';
    }
    for (std::size_t r = 0; r < report.normed_maxima.size(); ++r) {
        os << "normed_max," << r << ',' << report.normed_maxima[r] << '\n';
    }
    os.precision(old);
}

} // namespace mosumseg
