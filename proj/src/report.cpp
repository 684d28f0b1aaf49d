#include "latentpose/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "latentpose/binary_io.hpp"
#include "latentpose/errors.hpp"

namespace latentpose {

namespace {

void check_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\"\r\n") != std::string::npos)
    throw ParameterError(std::string("report: ") + what + " '" + s +
                         "' contains a reserved character");
}

std::string optional_value(const std::optional<double>& v) {
  return v ? format_value(*v) : std::string();
}

}  // namespace

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string render_report_csv(std::span<const ReportRow> rows) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : rows) {
    check_field(r.method, "method");
    check_field(r.action, "action");
    out += r.method + "," + r.action + "," + optional_value(r.mpjpe_mm) + "," +
           optional_value(r.lower_sum) + "," + optional_value(r.upper_sum) + "," +
           optional_value(r.full_sum) + "\n";
  }
  return out;
}

std::vector<ReportRow> report_rows(const EvalReport& report,
                                   std::span<const std::string> actions) {
  std::vector<ReportRow> rows;
  for (const auto& a : actions) {
    ReportRow r{report.method, a, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    if (auto it = report.action_mpjpe.find(a); it != report.action_mpjpe.end())
      r.mpjpe_mm = it->second;
    rows.push_back(r);
  }
  rows.push_back({report.method, "all", report.overall_mpjpe, report.sums.lower,
                  report.sums.upper, report.sums.full});
  return rows;
}

std::string render_mpjpe_table(std::span<const EvalReport> reports,
                               std::span<const std::string> actions) {
  std::string out = "method";
  for (const auto& a : actions) {
    check_field(a, "action");
    out += "," + a;
  }
  out += ",all\n";
  for (const auto& rep : reports) {
    check_field(rep.method, "method");
    out += rep.method;
    for (const auto& a : actions) {
      auto it = rep.action_mpjpe.find(a);
      out += "," + (it == rep.action_mpjpe.end() ? std::string() : format_value(it->second));
    }
    out += "," + format_value(rep.overall_mpjpe) + "\n";
  }
  return out;
}

std::string render_matrix_csv(const Tensor& matrix,
                              std::span<const std::string> labels) {
  if (matrix.rank() != 2 || matrix.dim(0) != matrix.dim(1) ||
      matrix.dim(0) != labels.size())
    throw DimensionError("matrix csv: expected a square matrix with one label per row, got " +
                         shape_string(matrix.shape()));
  std::string out = "limb";
  for (const auto& l : labels) {
    check_field(l, "label");
    out += "," + l;
  }
  out += "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += labels[i];
    for (std::size_t j = 0; j < labels.size(); ++j) {
      char buf[40];
      std::snprintf(buf, sizeof buf, ",%.6f", matrix(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_heatmap(const Tensor& matrix, std::span<const std::string> labels,
                   const std::filesystem::path& base, std::size_t cell) {
  const std::string csv = render_matrix_csv(matrix, labels);
  if (cell == 0) throw ParameterError("heatmap: cell size must be > 0");
  const auto values = matrix.data();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const std::size_t n = matrix.dim(0), side = n * cell;
  std::string pgm = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const double v = matrix(y / cell, x / cell);
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      pgm.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
    }
  auto with_ext = [&](const char* ext) {
    auto p = base;
    p += ext;
    return p;
  };
  char range[96];
  std::snprintf(range, sizeof range, "min = %.6f\nmax = %.6f\n", lo, hi);
  write_file(with_ext(".pgm"), pgm);
  write_file(with_ext(".txt"), range);
  write_file(with_ext(".csv"), csv);
}

}  // namespace latentpose
