#include "cltta/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cltta {

namespace {

constexpr const char* kHeader = "config_id,corruption,severity,accuracy,mean_threshold,batches,seed";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

std::string format_sig6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

std::vector<ReportRow> report_rows(const RunReport& report) {
    std::vector<ReportRow> rows;
    double threshold_total = 0.0;
    std::size_t batches_total = 0;
    for (const CorruptionResult& r : report.per_corruption) {
        rows.push_back({report.config.id, r.corruption, r.severity, r.accuracy, r.mean_threshold,
                        r.batches, report.seed});
        threshold_total += r.mean_threshold;
        batches_total += r.batches;
    }
    rows.push_back({report.config.id, "mean", 0, report.mean_accuracy,
                    threshold_total / static_cast<double>(report.per_corruption.size()),
                    batches_total, report.seed});
    return rows;
}

void write_report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
    std::ostringstream out;
    out << kHeader << "\n";
    for (const ReportRow& row : rows) {
        out << row.config_id << "," << row.corruption << "," << row.severity << ","
            << format_sig6(row.accuracy) << "," << format_sig6(row.mean_threshold) << ","
            << row.batches << "," << row.seed << "\n";
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary);
        if (!file) throw std::runtime_error("write_report_csv: cannot open " + tmp.string());
        file << out.str();
    }
    std::filesystem::rename(tmp, path);
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("read_report_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(file, line) || line != kHeader) {
        throw std::runtime_error("read_report_csv: unexpected header");
    }
    std::vector<ReportRow> rows;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 7) throw std::runtime_error("read_report_csv: malformed row");
        ReportRow row;
        row.config_id = fields[0];
        row.corruption = fields[1];
        row.severity = std::stoi(fields[2]);
        row.accuracy = std::stod(fields[3]);
        row.mean_threshold = std::stod(fields[4]);
        row.batches = static_cast<std::size_t>(std::stoull(fields[5]));
        row.seed = std::stoull(fields[6]);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace cltta
