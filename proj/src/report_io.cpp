#include "mosumseg/report_io.hpp"

#include "mosumseg/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mosumseg {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                         : comma - start)));
        if (comma == std::string::npos) {
            return out;
        }
        start = comma + 1;
    }
}

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

} // namespace

std::vector<double> CsvTable::column(std::size_t c) const {
    if (c >= cols()) {
        throw UsageError("csv: column " + std::to_string(c) + " out of range");
    }
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) {
        out[r] = values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    return out;
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<double> flat;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_fields(line);
        if (!have_header) {
            for (const auto& f : fields) {
                if (f.empty()) {
                    throw UsageError(where(source, line_no) + "empty column name in header");
                }
            }
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw UsageError(where(source, line_no) + "expected " + std::to_string(table.header.size()) +
                             " fields, found " + std::to_string(fields.size()));
        }
        for (const auto& f : fields) {
            double v = 0.0;
            const char* end = f.data() + f.size();
            const auto [ptr, ec] = std::from_chars(f.data(), end, v);
            if (f.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
                throw UsageError(where(source, line_no) + "not a finite number: '" + f + "'");
            }
            flat.push_back(v);
        }
        ++rows;
    }
    if (!have_header) {
        throw UsageError(source + ": empty input (a header row is required)");
    }
    if (rows == 0) {
        throw UsageError(source + ": no data rows");
    }
    const auto cols = static_cast<Eigen::Index>(table.header.size());
    table.values = Eigen::Map<const RowMatrix>(flat.data(), static_cast<Eigen::Index>(rows), cols);
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open '" + path + "'");
    }
    return parse_csv(in, path);
}

namespace {

Json theta_json(const Vector& theta) {
    if (theta.size() == 0) {
        return nullptr;
    }
    Json arr = Json::array();
    for (const double v : theta) {
        arr.push_back(v);
    }
    return arr;
}

} // namespace

Json result_to_json(const SegmentationResult& result, std::size_t offset, const Json& config) {
    Json doc;
    doc["q_hat"] = result.q_hat;
    doc["threshold"] = result.threshold;
    Json cps = Json::array();
    for (const auto& cp : result.changepoints) {
        cps.push_back({{"k", cp.k + offset},
                       {"interval", {cp.interval.v + offset, cp.interval.w + offset}},
                       {"peak", cp.interval.peak_value},
                       {"pass", cp.pass},
                       {"theta_inspect", theta_json(cp.inspection_theta)}});
    }
    doc["changepoints"] = std::move(cps);
    Json passes = Json::array();
    for (const auto& p : result.passes) {
        Json range = nullptr;
        if (!p.inspection_range.empty()) {
            range = {p.inspection_range.begin + offset + 1, p.inspection_range.end + offset};
        }
        passes.push_back({{"id", p.id},
                          {"inspection_range", range},
                          {"theta_inspect", theta_json(p.inspection_theta)},
                          {"found", p.found}});
    }
    doc["passes"] = std::move(passes);
    doc["config"] = config;
    Json warnings = Json::array();
    for (const auto& w : result.warnings) {
        warnings.push_back({{"k", w.k + offset}, {"flag", w.flag}});
    }
    doc["warnings"] = std::move(warnings);
    validate_result_json(doc);
    return doc;
}

void validate_result_json(const Json& doc) {
    auto fail = [](const std::string& what) { throw Error("result schema: " + what); };
    auto is_count = [](const Json& j) { return j.is_number_unsigned(); };
    auto check_theta = [&](const Json& t, const std::string& at) {
        if (t.is_null()) {
            return;
        }
        if (!t.is_array() || t.empty()) {
            fail(at + ".theta_inspect must be null or a non-empty array");
        }
        for (const auto& v : t) {
            if (!v.is_number()) {
                fail(at + ".theta_inspect entries must be numbers");
            }
        }
    };

    if (!doc.is_object()) {
        fail("document must be an object");
    }
    for (const char* key : {"q_hat", "threshold", "changepoints", "passes", "config", "warnings"}) {
        if (!doc.contains(key)) {
            fail(std::string("missing key '") + key + "'");
        }
    }
    if (!is_count(doc["q_hat"])) {
        fail("q_hat must be a non-negative integer");
    }
    if (!doc["threshold"].is_number()) {
        fail("threshold must be a number");
    }
    if (!doc["config"].is_object()) {
        fail("config must be an object");
    }
    const Json& cps = doc["changepoints"];
    if (!cps.is_array() || cps.size() != doc["q_hat"].get<std::size_t>()) {
        fail("changepoints must be an array of length q_hat");
    }
    const std::size_t npasses = doc["passes"].is_array() ? doc["passes"].size() : 0;
    if (npasses == 0) {
        fail("passes must be a non-empty array");
    }
    std::size_t previous = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const Json& cp = cps[i];
        const std::string at = "changepoints[" + std::to_string(i) + "]";
        if (!cp.is_object() || !cp.contains("k") || !cp.contains("interval") || !cp.contains("peak") ||
            !cp.contains("pass") || !cp.contains("theta_inspect")) {
            fail(at + " must have k, interval, peak, pass, theta_inspect");
        }
        if (!is_count(cp["k"]) || !cp["interval"].is_array() || cp["interval"].size() != 2 ||
            !is_count(cp["interval"][0]) || !is_count(cp["interval"][1])) {
            fail(at + ": k and interval bounds must be non-negative integers");
        }
        const auto k = cp["k"].get<std::size_t>();
        const auto v = cp["interval"][0].get<std::size_t>();
        const auto w = cp["interval"][1].get<std::size_t>();
        if (!(v <= k && k <= w)) {
            fail(at + ": interval must satisfy v <= k <= w");
        }
        if (i > 0 && k <= previous) {
            fail("changepoints must be strictly increasing in k");
        }
        previous = k;
        if (!cp["peak"].is_number()) {
            fail(at + ".peak must be a number");
        }
        if (!is_count(cp["pass"]) || cp["pass"].get<std::size_t>() < 1 || cp["pass"].get<std::size_t>() > npasses) {
            fail(at + ".pass must reference a pass id");
        }
        check_theta(cp["theta_inspect"], at);
    }
    for (std::size_t i = 0; i < npasses; ++i) {
        const Json& p = doc["passes"][i];
        const std::string at = "passes[" + std::to_string(i) + "]";
        if (!p.is_object() || !p.contains("id") || !is_count(p["id"]) || p["id"].get<std::size_t>() != i + 1) {
            fail(at + ".id must equal its position + 1");
        }
        if (!p.contains("found") || !is_count(p["found"])) {
            fail(at + ".found must be a non-negative integer");
        }
        if (!p.contains("inspection_range") ||
            !(p["inspection_range"].is_null() ||
              (p["inspection_range"].is_array() && p["inspection_range"].size() == 2))) {
            fail(at + ".inspection_range must be null or [a, b]");
        }
        check_theta(p.value("theta_inspect", Json()), at);
    }
    if (!doc["warnings"].is_array()) {
        fail("warnings must be an array");
    }
    for (const auto& w : doc["warnings"]) {
        if (!w.is_object() || !w.contains("k") || !is_count(w["k"]) || !w.contains("flag") ||
            !w["flag"].is_string()) {
            fail("warnings entries must be {k, flag}");
        }
    }
}

void write_stats_csv(std::ostream& os, const ScanResult& scan, std::size_t offset) {
    std::ostringstream buf;
    buf.precision(17);
    buf << "k,value\n";
    for (std::size_t j = 0; j < scan.stats.size(); ++j) {
        buf << scan.first_k() + j + offset << ',';
        if (std::isnan(scan.stats[j])) {
            buf << "nan";
        } else {
            buf << scan.stats[j];
        }
        buf << '\n';
    }
    os << buf.str();
}

} // namespace mosumseg
