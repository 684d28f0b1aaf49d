#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latentpose/eval.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose {

inline constexpr const char* kReportHeader =
    "method,action,mpjpe_mm,lower_sum,upper_sum,full_sum";

/// One line of the long-format report. Missing values render as empty
/// fields; present ones with two decimals.
struct ReportRow {
  std::string method;
  std::string action;
  std::optional<double> mpjpe_mm;
  std::optional<double> lower_sum;
  std::optional<double> upper_sum;
  std::optional<double> full_sum;
};

/// "%.2f"; non-finite values render as nan / inf / -inf.
std::string format_value(double v);

/// Header line plus one line per row, '\n' terminated. Method and action
/// names may not contain commas, quotes or line breaks.
std::string render_report_csv(std::span<const ReportRow> rows);

/// One row per action in `actions` order (MPJPE only) followed by an "all"
/// row with the overall MPJPE and the three partition sums.
std::vector<ReportRow> report_rows(const EvalReport& report,
                                   std::span<const std::string> actions);

/// Wide table: "method,<action>,...,all", one line per report.
std::string render_mpjpe_table(std::span<const EvalReport> reports,
                               std::span<const std::string> actions);

/// Square matrix as CSV with a header row and a leading label column.
std::string render_matrix_csv(const Tensor& matrix,
                              std::span<const std::string> labels);

/// Writes `<base>.pgm` (linear gray map of the matrix, min black, max white,
/// `cell` pixels per entry), `<base>.txt` with the min and max, and
/// `<base>.csv`.
void write_heatmap(const Tensor& matrix, std::span<const std::string> labels,
                   const std::filesystem::path& base, std::size_t cell = 8);

}  // namespace latentpose
