#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "rdgcn/config.hpp"
#include "rdgcn/evaluation.hpp"
#include "rdgcn/training.hpp"

namespace rdgcn {

inline constexpr const char* kReportSchema = "rdgcn-report/1";

/// Human-readable summary.
std::string format_report(const AlignmentReport& report, const RunConfig& config);

/// Structured report (schema `rdgcn-report/1`). Per-pair ranks are included
/// when `config.eval.per_pair_ranks` is set.
std::string report_json(const AlignmentReport& report, const RunConfig& config);

/// Writes report.txt and report.json into `dir`.
void write_report(const std::filesystem::path& dir, const AlignmentReport& report, const RunConfig& config);

/// One JSON object per line: epoch, loss, optional hits1, wall_seconds.
void write_log_line(std::ostream& out, const EpochRecord& record);

}  // namespace rdgcn
