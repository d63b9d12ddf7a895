#pragma once

// Detection report (JSON + CSV) and ROC CSV emission.

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "istd/metrics.hpp"

namespace istd {

inline constexpr const char* kReportSchema = "istd-detection-report";
inline constexpr int kReportVersion = 1;

struct ImageResult {
  std::string id;
  ConfusionCounts pixels;
  PdFaCounts targets;
};

struct DetectionReport {
  double match_radius = kDefaultMatchRadius;
  double pred_threshold = 0.5;
  std::vector<ImageResult> images;

  ConfusionCounts total_pixels() const {
    ConfusionCounts c;
    for (const auto& r : images) c += r.pixels;
    return c;
  }
  PdFaCounts total_targets() const {
    PdFaCounts c;
    for (const auto& r : images) c += r.targets;
    return c;
  }
};

// Shortest round-trip decimal form, independent of locale.
inline std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline nlohmann::ordered_json report_json(const DetectionReport& report) {
  using nlohmann::ordered_json;
  auto counts = [](const ConfusionCounts& c, const PdFaCounts& t) {
    const PixelMetrics m = pixel_metrics(c);
    ordered_json j;
    j["iou"] = m.iou;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["pd"] = t.pd();
    j["pd_vacuous"] = t.pd_vacuous();
    j["fa"] = t.fa();
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["fn"] = c.fn;
    j["tn"] = c.tn;
    j["targets_correct"] = t.correct;
    j["targets_total"] = t.total;
    j["false_pixels"] = t.false_pixels;
    j["pixels"] = t.all_pixels;
    return j;
  };
  ordered_json j;
  j["schema"] = kReportSchema;
  j["version"] = kReportVersion;
  j["settings"] = {{"match_radius", report.match_radius},
                   {"pred_threshold", report.pred_threshold}};
  j["images"] = ordered_json::array();
  for (const auto& r : report.images) {
    ordered_json e;
    e["id"] = r.id;
    e.update(counts(r.pixels, r.targets));
    j["images"].push_back(std::move(e));
  }
  ordered_json agg;
  agg["image_count"] = report.images.size();
  agg.update(counts(report.total_pixels(), report.total_targets()));
  j["aggregate"] = std::move(agg);
  return j;
}

inline void write_report_json(std::ostream& out, const DetectionReport& report) {
  out << report_json(report).dump(2) << '\n';
}

// One row per image plus a final "*aggregate*" row.
inline void write_report_csv(std::ostream& out, const DetectionReport& report) {
  out << "id,iou,precision,recall,f1,pd,fa,tp,fp,fn,tn,targets_correct,targets_total,"
         "false_pixels,pixels\n";
  auto row = [&out](const std::string& id, const ConfusionCounts& c, const PdFaCounts& t) {
    const PixelMetrics m = pixel_metrics(c);
    out << id << ',' << format_number(m.iou) << ',' << format_number(m.precision) << ','
        << format_number(m.recall) << ',' << format_number(m.f1) << ',' << format_number(t.pd())
        << ',' << format_number(t.fa()) << ',' << c.tp << ',' << c.fp << ',' << c.fn << ','
        << c.tn << ',' << t.correct << ',' << t.total << ',' << t.false_pixels << ','
        << t.all_pixels << '\n';
  };
  for (const auto& r : report.images) row(r.id, r.pixels, r.targets);
  row("*aggregate*", report.total_pixels(), report.total_targets());
}

inline void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "threshold,pd,fa\n";
  for (const auto& s : curve.samples)
    out << format_number(s.threshold) << ',' << format_number(s.pd) << ',' << format_number(s.fa)
        << '\n';
}

}  // namespace istd
