#include "mosumseg/cli.hpp"

#include "mosumseg/errors.hpp"
#include "mosumseg/estimators.hpp"
#include "mosumseg/report_io.hpp"
#include "mosumseg/segmenter.hpp"
#include "mosumseg/simlab.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace mosumseg {

namespace {

struct SegmentArgs {
    std::string input;
    std::string output;
    std::string emit_stats;
    std::string model{"mean"};
    std::size_t G{0};
    double alpha{0.05};
    double epsilon{0.2};
    std::string statistic{"score"};
    std::string inspection{"global"};
    std::string scaling;
    std::string known;
    std::string threshold{"asymptotic"};
    double inflation{1.0};
    bool relocate{false};
    std::string psi;
    std::size_t max_depth{3};
};

struct SimulateArgs {
    std::string scenario;
    std::size_t G{0};
    std::size_t reps{100};
    std::uint64_t seed{1};
    std::string estimator;
    std::string out;
    std::size_t threads{0};
};

struct CalibrateArgs {
    std::size_t n{2000};
    std::size_t G{200};
    std::string model{"mean"};
    std::size_t reps{500};
    std::uint64_t seed{1};
    std::string scaling{"s-local"};
    std::string known;
    std::string alphas{"0.01,0.05,0.1,0.2"};
    std::string out;
    std::size_t threads{0};
};

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !std::isfinite(v)) {
            throw UsageError(what + ": not a number: '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw UsageError(what + ": empty list");
    }
    return out;
}

// One value: v I; p values: diagonal; p * p values: row-major matrix.
Matrix parse_matrix(const std::string& text, std::size_t p, const std::string& what) {
    const auto v = parse_numbers(text, what);
    const auto dim = static_cast<Eigen::Index>(p);
    if (v.size() == 1) {
        return v[0] * Matrix::Identity(dim, dim);
    }
    if (v.size() == p) {
        return Eigen::Map<const Vector>(v.data(), dim).asDiagonal();
    }
    if (v.size() == p * p) {
        return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(),
                                                                                                       dim, dim);
    }
    throw UsageError(what + ": expected 1, " + std::to_string(p) + " or " + std::to_string(p * p) + " values");
}

void require_columns(const CsvTable& t, std::size_t cols, const std::string& model) {
    if (t.cols() != cols) {
        throw UsageError("model '" + model + "' expects " + std::to_string(cols) + " column(s), input has " +
                         std::to_string(t.cols()));
    }
}

struct LoadedInput {
    Dataset data;
    std::unique_ptr<EstimatingModel> model;
};

LoadedInput load_input(const SegmentArgs& args) {
    const CsvTable table = read_csv_file(args.input);
    LoadedInput in;
    const std::string& m = args.model;
    if (m == "mean" || m == "median-like" || m == "median-like-sample" || m == "sign-median") {
        require_columns(table, 1, m);
        in.data = Dataset::univariate(table.column(0));
        in.model = make_model(m);
    } else if (m == "multimean") {
        in.data = Dataset::multivariate(table.values);
        in.model = make_model(m, table.cols());
    } else if (m == "linreg") {
        if (table.cols() < 1) {
            throw UsageError("linreg expects a response column followed by regressor columns");
        }
        const RowMatrix regressors = table.values.rightCols(table.values.cols() - 1);
        in.data = Dataset::regression(table.column(0), regressors);
        in.model = make_model(m, table.cols());
    } else if (m == "inarch") {
        require_columns(table, 1, m);
        in.data = Dataset::inarch(table.column(0));
        in.model = make_model(m);
    } else {
        throw UsageError("unknown model '" + m + "'");
    }
    return in;
}

std::size_t parse_index(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw UsageError(what + ": not an index: '" + s + "'");
    }
    return static_cast<std::size_t>(v);
}

// Range "a,b" of one-based observation indices to a sample window.
Window parse_range(const std::string& text, const Dataset& data) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw UsageError("inspection range must be range:a,b");
    }
    const std::size_t a = parse_index(text.substr(0, comma), "inspection range");
    const std::size_t b = parse_index(text.substr(comma + 1), "inspection range");
    const std::size_t offset = data.offset();
    if (a < offset + 1 || b < a || b - offset > data.size()) {
        throw UsageError("inspection range " + std::to_string(a) + ".." + std::to_string(b) +
                         " outside the usable observations " + std::to_string(offset + 1) + ".." +
                         std::to_string(data.size() + offset));
    }
    return {a - 1 - offset, b - offset};
}

int cmd_segment(const SegmentArgs& args, std::ostream& out) {
    if (args.G == 0) {
        throw UsageError("--G is required");
    }
    LoadedInput in = load_input(args);
    const Dataset& data = in.data;
    const EstimatingModel& model = *in.model;
    const std::size_t p = model.dimension();

    SegmentConfig config;
    config.alpha = args.alpha;
    config.epsilon = args.epsilon;
    config.relocate = args.relocate;
    config.scan.G = args.G;
    if (args.statistic == "score") {
        config.scan.statistic = Statistic::Score;
    } else if (args.statistic == "wald") {
        config.scan.statistic = Statistic::Wald;
    } else {
        throw UsageError("--statistic must be score or wald");
    }
    const bool wald = config.scan.statistic == Statistic::Wald;

    if (args.threshold == "asymptotic") {
        config.threshold_mode = ThresholdMode::Asymptotic;
    } else if (args.threshold == "inflated") {
        config.threshold_mode = ThresholdMode::Inflated;
        config.inflation = args.inflation;
    } else {
        throw UsageError("--threshold must be asymptotic or inflated");
    }

    std::string scaling = args.scaling;
    if (scaling.empty()) {
        if (!args.known.empty()) {
            scaling = "known";
        } else if (wald) {
            scaling = model.kind() == ModelKind::Inarch ? "inarch-gamma" : "w-local";
        } else {
            scaling = "s-local";
        }
    }
    config.scan.scaling.kind = parse_scaling_kind(scaling);
    if (config.scan.scaling.kind == ScalingKind::Known) {
        if (args.known.empty()) {
            throw UsageError("--scaling known needs --known");
        }
        config.scan.scaling.known = parse_matrix(args.known, p, "--known");
    } else if (!args.known.empty()) {
        throw UsageError("--known only applies with --scaling known");
    }
    if (!args.psi.empty()) {
        config.psi = parse_matrix(args.psi, p, "--psi");
        config.relocate = true;
    }

    bool recursive = false;
    const std::string& insp = args.inspection;
    if (insp == "global") {
        config.scan.inspection = Inspection::global();
    } else if (insp == "recursive") {
        recursive = true;
    } else if (insp.rfind("range:", 0) == 0) {
        config.scan.inspection = Inspection::on_range(parse_range(insp.substr(6), data));
    } else if (insp.rfind("fixed:", 0) == 0) {
        const auto v = parse_numbers(insp.substr(6), "fixed inspection");
        config.scan.inspection = Inspection::fixed(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    } else {
        throw UsageError("--inspection must be global, range:a,b, recursive or fixed:v1,...");
    }
    if (wald && insp != "global") {
        throw UsageError("--inspection applies to the score statistic only");
    }

    const SegmentationResult result =
        recursive ? segment_recursive(data, model, config, args.max_depth) : segment(data, model, config);

    Json cfg = {{"input", args.input},
                {"model", model.name()},
                {"n", data.size()},
                {"offset", data.offset()},
                {"G", args.G},
                {"alpha", args.alpha},
                {"epsilon", args.epsilon},
                {"statistic", to_string(config.scan.statistic)},
                {"inspection", args.inspection},
                {"scaling", to_string(config.scan.scaling.kind)},
                {"threshold_mode", args.threshold},
                {"relocate", config.relocate}};
    if (config.threshold_mode == ThresholdMode::Inflated) {
        cfg["inflation"] = config.inflation;
    }
    const Json doc = result_to_json(result, data.offset(), cfg);

    if (!args.emit_stats.empty()) {
        std::ofstream stats(args.emit_stats);
        if (!stats) {
            throw UsageError("cannot write '" + args.emit_stats + "'");
        }
        write_stats_csv(stats, result.scans.front(), data.offset());
        for (std::size_t i = 1; i < result.scans.size(); ++i) {
            std::ofstream extra(args.emit_stats + ".pass" + std::to_string(i + 1));
            write_stats_csv(extra, result.scans[i], data.offset());
        }
    }
    const std::string text = doc.dump(2) + "\n";
    if (args.output.empty()) {
        out << text;
    } else {
        std::ofstream f(args.output);
        if (!f) {
            throw UsageError("cannot write '" + args.output + "'");
        }
        f << text;
    }
    return kExitOk;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    std::size_t G = args.G;
    if (G == 0) {
        if (args.scenario == "table1") {
            G = 50;
        } else if (args.scenario == "table2") {
            G = 100;
        } else if (args.scenario == "table3") {
            G = 150;
        }
    }
    const auto rows = study_rows(args.scenario, G, args.estimator);
    std::vector<StudyReport> reports;
    for (const auto& row : rows) {
        StudyOptions options;
        options.replications = args.reps;
        options.master_seed = args.seed;
        options.threads = args.threads;
        options.detection_intervals = row.detection_intervals;
        reports.push_back(run_study(row.scenario, row.method, options));
        err << row.method.label << ": " << reports.back().runtime_seconds << " s\n";
    }
    const std::string prefix = args.out.empty() ? "study_" + args.scenario : args.out;
    std::ofstream csv(prefix + ".csv");
    std::ofstream table(prefix + ".txt");
    if (!csv || !table) {
        throw UsageError("cannot write '" + prefix + ".csv' / '.txt'");
    }
    write_study_csv(csv, reports);
    write_study_table(table, reports);
    write_study_table(out, reports);
    return kExitOk;
}

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out) {
    CalibrationOptions options;
    options.n = args.n;
    options.G = args.G;
    options.model = args.model;
    options.replications = args.reps;
    options.master_seed = args.seed;
    options.threads = args.threads;
    options.alphas = parse_numbers(args.alphas, "--alphas");
    options.scaling.kind = parse_scaling_kind(args.known.empty() ? args.scaling : "known");
    if (options.scaling.kind == ScalingKind::Known) {
        if (args.known.empty()) {
            throw UsageError("--scaling known needs --known");
        }
        const std::size_t p = make_model(args.model, args.model == "linreg" ? 3 : 0)->dimension();
        options.scaling.known = parse_matrix(args.known, p, "--known");
    }
    const CalibrationReport report = run_calibration(options);
    if (!args.out.empty()) {
        std::ofstream f(args.out);
        if (!f) {
            throw UsageError("cannot write '" + args.out + "'");
        }
        write_calibration_csv(f, report);
    }
    Json summary = {{"n", report.n},
                    {"G", report.G},
                    {"model", args.model},
                    {"replications", args.reps},
                    {"ks_distance", report.ks_distance},
                    {"alpha", report.alphas},
                    {"threshold", report.thresholds},
                    {"exceedance", report.exceedance},
                    {"false_alarm", report.false_alarm}};
    out << summary.dump(2) << "\n";
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Moving-sum change point segmentation"};
    app.require_subcommand(1);

    SegmentArgs seg;
    auto* segment_cmd = app.add_subcommand("segment", "Segment a CSV series");
    segment_cmd->add_option("-i,--input", seg.input, "CSV input with a header row")->required();
    segment_cmd->add_option("-o,--output", seg.output, "JSON output path (default: stdout)");
    segment_cmd->add_option("--emit-stats", seg.emit_stats, "Write the statistic series as k,value CSV");
    segment_cmd->add_option("-m,--model", seg.model,
                            "mean, median-like, median-like-sample, sign-median, multimean, linreg, inarch");
    segment_cmd->add_option("-G,--G", seg.G, "Bandwidth")->required();
    segment_cmd->add_option("--alpha", seg.alpha, "Significance level");
    segment_cmd->add_option("--epsilon", seg.epsilon, "Minimal exceeding-interval length, in units of G");
    segment_cmd->add_option("--statistic", seg.statistic, "score or wald");
    segment_cmd->add_option("--inspection", seg.inspection, "global, range:a,b, recursive or fixed:v1,...");
    segment_cmd->add_option("--scaling", seg.scaling, "known, s-global, s-local, w-local, inarch-gamma, mosum-window");
    segment_cmd->add_option("--known", seg.known, "Known scaling matrix: v, diagonal or row-major entries");
    segment_cmd->add_option("--threshold", seg.threshold, "asymptotic or inflated");
    segment_cmd->add_option("--inflation", seg.inflation, "Constant of the inflated threshold");
    segment_cmd->add_flag("--relocate", seg.relocate, "Relocate estimates by the weighted signal norm");
    segment_cmd->add_option("--psi", seg.psi, "Relocation weight matrix (implies --relocate)");
    segment_cmd->add_option("--max-depth", seg.max_depth, "Passes of the recursive inspection mode");

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run a simulation study");
    simulate_cmd->add_option("-s,--scenario", sim.scenario, "table1, table2 or table3")->required();
    simulate_cmd->add_option("-G,--G", sim.G, "Bandwidth (default per scenario)");
    simulate_cmd->add_option("-r,--reps", sim.reps, "Replications");
    simulate_cmd->add_option("--seed", sim.seed, "Master seed");
    simulate_cmd->add_option("--estimator", sim.estimator, "Method variant or label filter");
    simulate_cmd->add_option("-o,--out", sim.out, "Output prefix for .csv and .txt");
    simulate_cmd->add_option("--threads", sim.threads, "Worker threads (default: MOSUMSEG_THREADS or all cores)");

    CalibrateArgs cal;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Null distribution of the normed maximum");
    calibrate_cmd->add_option("-n,--n", cal.n, "Series length");
    calibrate_cmd->add_option("-G,--G", cal.G, "Bandwidth");
    calibrate_cmd->add_option("-m,--model", cal.model, "Model name");
    calibrate_cmd->add_option("-r,--reps", cal.reps, "Replications");
    calibrate_cmd->add_option("--seed", cal.seed, "Master seed");
    calibrate_cmd->add_option("--scaling", cal.scaling, "Score scaling");
    calibrate_cmd->add_option("--known", cal.known, "Known scaling matrix");
    calibrate_cmd->add_option("--alphas", cal.alphas, "Comma-separated significance levels");
    calibrate_cmd->add_option("-o,--out", cal.out, "CSV output path");
    calibrate_cmd->add_option("--threads", cal.threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*segment_cmd) {
            return cmd_segment(seg, out);
        }
        if (*simulate_cmd) {
            return cmd_simulate(sim, out, err);
        }
        return cmd_calibrate(cal, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, const char* const* argv) {
    return run_cli(argc, argv, std::cout, std::cerr);
}

} // namespace mosumseg
