#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cltta/adapt.hpp"

namespace cltta {

// One CSV line. The per-config summary line uses corruption="mean",
// severity=0, and the total batch count.
struct ReportRow {
    std::string config_id;
    std::string corruption;
    int severity = 0;
    double accuracy = 0.0;
    double mean_threshold = 0.0;
    std::size_t batches = 0;
    std::uint64_t seed = 0;

    bool operator==(const ReportRow&) const = default;
};

// %.6g; CSV determinism claims hold at this precision.
std::string format_sig6(double value);

std::vector<ReportRow> report_rows(const RunReport& report);

// Header: config_id,corruption,severity,accuracy,mean_threshold,batches,seed
// Written atomically (temp file + rename).
void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

}  // namespace cltta
