#pragma once

#include "mosumseg/dataset.hpp"
#include "mosumseg/segmenter.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mosumseg {

using Json = nlohmann::json;

// Numeric CSV with a mandatory header row, comma delimiter, '.' decimal point.
struct CsvTable {
    std::vector<std::string> header;
    RowMatrix values;

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
    std::vector<double> column(std::size_t c) const;
};

// Throws UsageError naming `source` and the offending line.
CsvTable parse_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::string& path);

// Result document. Locations k, v, w are reported in observation units
// (sample k + data offset): the change happens after observation k.
// Inspection ranges are one-based inclusive observation indices.
Json result_to_json(const SegmentationResult& result, std::size_t offset, const Json& config);

// Structural check of a result document; throws Error with the first
// violation.
void validate_result_json(const Json& doc);

// "k,value" rows of a scan, k in observation units. Missing values are
// written as "nan".
void write_stats_csv(std::ostream& os, const ScanResult& scan, std::size_t offset);

} // namespace mosumseg
