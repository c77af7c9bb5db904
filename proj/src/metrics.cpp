#include "rvos/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "rvos/errors.hpp"
#include "rvos/morphology.hpp"

namespace rvos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_shapes(const MaskTrack& pred, const MaskTrack& gt, const char* what) {
  if (pred.size() != gt.size())
    throw DomainError(std::string(what) + ": frame counts differ (" + std::to_string(pred.size()) + " vs " +
                      std::to_string(gt.size()) + ")");
  for (std::size_t t = 0; t < pred.size(); ++t)
    if (pred[t].rows() != gt[t].rows() || pred[t].cols() != gt[t].cols())
      throw DomainError(std::string(what) + ": frame " + std::to_string(t) + " shapes differ");
}

/// Distance transform by brute force over a (2*tol+1)^2 window.
double matched_fraction(const Mask& from, const Mask& to, int tolerance) {
  const int H = static_cast<int>(from.rows()), W = static_cast<int>(from.cols());
  const long tol2 = static_cast<long>(tolerance) * tolerance;
  int total = 0, hit = 0;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      if (!from(r, c)) continue;
      ++total;
      bool found = false;
      for (int dr = -tolerance; dr <= tolerance && !found; ++dr)
        for (int dc = -tolerance; dc <= tolerance && !found; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
          if (static_cast<long>(dr) * dr + static_cast<long>(dc) * dc <= tol2 && to(rr, cc)) found = true;
        }
      hit += found;
    }
  return total == 0 ? 0.0 : static_cast<double>(hit) / total;
}

}  // namespace

double region_similarity(const MaskTrack& pred, const MaskTrack& gt) {
  check_shapes(pred, gt, "region_similarity");
  if (pred.empty()) return 1.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const auto p = pred[t] > 0, g = gt[t] > 0;
    const long inter = (p && g).count();
    const long uni = (p || g).count();
    sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return sum / static_cast<double>(pred.size());
}

Mask boundary_pixels(const Mask& m) { return boundary(m); }

double contour_accuracy(const MaskTrack& pred, const MaskTrack& gt, int tolerance) {
  check_shapes(pred, gt, "contour_accuracy");
  if (tolerance < 0) throw DomainError("contour_accuracy: tolerance must be >= 0");
  if (pred.empty()) return 1.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const Mask bp = boundary_pixels(pred[t]), bg = boundary_pixels(gt[t]);
    const bool ep = !(bp > 0).any(), eg = !(bg > 0).any();
    if (ep && eg) {
      sum += 1.0;
      continue;
    }
    if (ep || eg) continue;
    const double precision = matched_fraction(bp, bg, tolerance);
    const double recall = matched_fraction(bg, bp, tolerance);
    sum += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(pred.size());
}

int default_tolerance(int height, int width) {
  return static_cast<int>(std::ceil(0.008 * std::sqrt(static_cast<double>(height) * height +
                                                      static_cast<double>(width) * width)));
}

JFScore jf_score(const MaskTrack& pred, const MaskTrack& gt, int tolerance) {
  JFScore s;
  s.J = region_similarity(pred, gt);
  s.F = contour_accuracy(pred, gt, tolerance);
  s.JF = (s.J + s.F) / 2.0;
  return s;
}

MetricsReport evaluate_dataset(const std::map<std::string, Prediction>& predictions, const DatasetManifest& manifest,
                               int tolerance) {
  std::vector<std::string> missing;
  for (const auto& e : manifest.expressions)
    if (!predictions.count(e.expression_id)) missing.push_back(e.expression_id);
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw CoverageError("missing predictions for: " + list);
  }
  MetricsReport report;
  report.tolerance = tolerance;
  for (const auto& e : manifest.expressions) {
    const Prediction& p = predictions.at(e.expression_id);
    const VideoEntry& v = manifest.video(e.video_id);
    for (int i : p.frame_indices)
      if (i < 0 || i >= v.source_length)
        throw ValidationError("prediction " + e.expression_id + ": frame index " + std::to_string(i) +
                              " out of range");
    const MaskTrack gt = manifest.target_union(e, p.frame_indices);
    try {
      report.per_expression[e.expression_id] =
          jf_score(p.masks, gt, tolerance < 0 ? default_tolerance(v.height, v.width) : tolerance);
    } catch (const DomainError& err) {
      throw ValidationError("prediction " + e.expression_id + ": " + err.what());
    }
  }
  for (const auto& [id, s] : report.per_expression) {
    report.aggregate.J += s.J;
    report.aggregate.F += s.F;
  }
  report.n_expressions = static_cast<int>(report.per_expression.size());
  if (report.n_expressions > 0) {
    report.aggregate.J /= report.n_expressions;
    report.aggregate.F /= report.n_expressions;
  }
  report.aggregate.JF = (report.aggregate.J + report.aggregate.F) / 2.0;
  return report;
}

namespace {

json score_json(const JFScore& s) { return {{"J", s.J}, {"F", s.F}, {"JF", s.JF}}; }

JFScore score_from(const json& j) { return {j.at("J").get<double>(), j.at("F").get<double>(), j.at("JF").get<double>()}; }

std::string tolerance_text(int tolerance) {
  return tolerance < 0 ? "ceil(0.008*diag) px" : std::to_string(tolerance) + " px";
}

}  // namespace

void write_report_json(const fs::path& path, const MetricsReport& report) {
  json doc;
  doc["boundary"] = "foreground pixels 4-adjacent to background or the image border";
  doc["tolerance"] = tolerance_text(report.tolerance);
  doc["tolerance_px"] = report.tolerance;
  doc["empty_frames"] = "both empty = 1, one-sided empty = 0, averaged over all frames";
  doc["n_expressions"] = report.n_expressions;
  doc["aggregate"] = score_json(report.aggregate);
  json per = json::object();
  for (const auto& [id, s] : report.per_expression) per[id] = score_json(s);
  doc["per_expression"] = per;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

MetricsReport read_report_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  try {
    const json doc = json::parse(in);
    MetricsReport r;
    r.n_expressions = doc.at("n_expressions").get<int>();
    r.tolerance = doc.value("tolerance_px", -1);
    r.aggregate = score_from(doc.at("aggregate"));
    for (const auto& [id, s] : doc.at("per_expression").items()) r.per_expression[id] = score_from(s);
    return r;
  } catch (const json::exception& e) {
    throw ValidationError("report " + path.string() + ": " + e.what());
  }
}

std::string report_markdown(const MetricsReport& report) {
  std::ostringstream os;
  char buf[160];
  os << "# Evaluation\n\n";
  os << "Boundary: foreground pixels 4-adjacent to background or the image border. Tolerance: "
     << tolerance_text(report.tolerance) << ". Empty frames: both empty = 1, one-sided = 0.\n\n";
  os << "| Expression | J&F | J | F |\n|---|---|---|---|\n";
  for (const auto& [id, s] : report.per_expression) {
    std::snprintf(buf, sizeof(buf), "| %s | %.4f | %.4f | %.4f |\n", id.c_str(), s.JF, s.J, s.F);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "| **mean (%d)** | %.4f | %.4f | %.4f |\n", report.n_expressions,
                report.aggregate.JF, report.aggregate.J, report.aggregate.F);
  os << buf;
  return os.str();
}

}  // namespace rvos
