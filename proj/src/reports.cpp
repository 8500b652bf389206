#include "cpdm/reports.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cpdm {

namespace {

constexpr const char* kCnrFormula = "10*log10(|mu_signal-mu_background|/sqrt(var_signal+var_background))";

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

nlohmann::json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

}  // namespace

RoiSpec parse_roi(std::istream& in) {
  RoiSpec roi;
  bool have_background = false;
  bool have_homogeneous = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    Rect r;
    if (!(ls >> r.x >> r.y >> r.w >> r.h)) {
      throw DomainError("ROI line " + std::to_string(line_no) + ": expected `kind x y w h`");
    }
    std::string extra;
    if (ls >> extra) throw DomainError("ROI line " + std::to_string(line_no) + ": trailing text");
    if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0) {
      throw DomainError("ROI line " + std::to_string(line_no) + ": empty or negative rectangle");
    }
    if (kind == "signal") {
      roi.signal_regions.push_back(r);
    } else if (kind == "background") {
      roi.background_region = r;
      have_background = true;
    } else if (kind == "homogeneous") {
      roi.homogeneous_region = r;
      have_homogeneous = true;
    } else {
      throw DomainError("ROI line " + std::to_string(line_no) + ": unknown region kind '" + kind +
                        "'");
    }
  }
  if (roi.signal_regions.empty()) throw DomainError("ROI file has no signal region");
  if (!have_background) throw DomainError("ROI file has no background region");
  if (!have_homogeneous) roi.homogeneous_region = roi.background_region;
  return roi;
}

RoiSpec read_roi_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ROI file '" + path.string() + "'");
  return parse_roi(in);
}

std::string format_roi(const RoiSpec& roi) {
  std::ostringstream ss;
  auto put = [&](const char* kind, const Rect& r) {
    ss << kind << ' ' << r.x << ' ' << r.y << ' ' << r.w << ' ' << r.h << '\n';
  };
  for (const auto& r : roi.signal_regions) put("signal", r);
  put("background", roi.background_region);
  put("homogeneous", roi.homogeneous_region);
  return ss.str();
}

MetricsReport evaluate_metrics(const Image& img, const RoiSpec& roi, const Image* ref) {
  MetricsReport rep;
  rep.cnr_db = cnr(img, roi);
  rep.enl = enl(img, roi);
  if (ref) rep.psnr_db = psnr(img, *ref);
  return rep;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream ss;
  ss << "cnr_db=" << format_number(report.cnr_db) << '\n';
  ss << "cnr_formula=" << kCnrFormula << '\n';
  ss << "enl=" << format_number(report.enl) << '\n';
  ss << "enl_infinite=" << (std::isinf(report.enl) ? 1 : 0) << '\n';
  if (report.psnr_db) {
    ss << "psnr_db=" << format_number(*report.psnr_db) << '\n';
    ss << "psnr_infinite=" << (std::isinf(*report.psnr_db) ? 1 : 0) << '\n';
  }
  return ss.str();
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["cnr_db"] = number_or_string(report.cnr_db);
  j["cnr_formula"] = kCnrFormula;
  j["enl"] = number_or_string(report.enl);
  j["enl_infinite"] = std::isinf(report.enl);
  if (report.psnr_db) {
    j["psnr_db"] = number_or_string(*report.psnr_db);
    j["psnr_infinite"] = std::isinf(*report.psnr_db);
  }
  return j;
}

nlohmann::json trace_to_json(const DespeckleTrace& trace) {
  return {{"variant", trace.variant},
          {"sigma_est", trace.sigma_est},
          {"model_sigma", trace.model_sigma},
          {"truncation_step", trace.truncation_step},
          {"start_step", trace.start_step},
          {"timesteps", trace.timesteps},
          {"objective", trace.objective},
          {"newton_iterations", trace.newton_iterations}};
}

}  // namespace cpdm
