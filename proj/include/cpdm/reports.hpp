#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cpdm/metrics.hpp"
#include "cpdm/solver.hpp"
#include "json.hpp"

namespace cpdm {

/// ROI text format: one region per line, `kind x y w h`, kind one of
/// signal | background | homogeneous. Blank lines and `#` comments are ignored.
RoiSpec parse_roi(std::istream& in);
RoiSpec read_roi_file(const std::filesystem::path& path);
std::string format_roi(const RoiSpec& roi);

struct MetricsReport {
  double cnr_db = 0.0;
  double enl = 0.0;
  std::optional<double> psnr_db;
};

MetricsReport evaluate_metrics(const Image& img, const RoiSpec& roi, const Image* ref = nullptr);

/// `key=value` lines; infinite values are written as `inf` with a flag key.
std::string format_report(const MetricsReport& report);
nlohmann::json report_to_json(const MetricsReport& report);

nlohmann::json trace_to_json(const DespeckleTrace& trace);

}  // namespace cpdm
