#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ringnet/container.hpp"
#include "ringnet/evaluation.hpp"
#include "ringnet/experiments.hpp"
#include "ringnet/losses.hpp"
#include "ringnet/mesh_io.hpp"

namespace ringnet {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FormatError("cannot write " + p.string());
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string loss_csv_header() { return "step,total,shape_consistency,projection,shape_reg,expression_reg\n"; }

inline std::string loss_csv_row(std::uint64_t step, const LossBreakdown& l) {
  using detail::shortest;
  return std::to_string(step) + "," + shortest(l.total) + "," + shortest(l.shape_consistency) + "," + shortest(l.projection) +
         "," + shortest(l.shape_reg) + "," + shortest(l.expression_reg) + "\n";
}

/// `first_step` is the 1-based step number of history[0].
inline std::string loss_csv(const std::vector<LossBreakdown>& history, std::uint64_t first_step = 1) {
  std::string out = loss_csv_header();
  for (std::size_t i = 0; i < history.size(); ++i) out += loss_csv_row(first_step + i, history[i]);
  return out;
}

inline std::string curve_csv(const std::vector<double>& thresholds, const std::vector<double>& fractions) {
  if (thresholds.size() != fractions.size()) throw DimensionError("curve_csv: thresholds and fractions differ in length");
  std::string out = "threshold,fraction\n";
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    out += detail::shortest(thresholds[i]) + "," + detail::shortest(fractions[i]) + "\n";
  return out;
}

struct Curve {
  std::string label;
  std::vector<double> thresholds, fractions;
};

inline Curve parse_curve_csv(const std::string& text, const std::string& label) {
  Curve c;
  c.label = label;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (n == 1) {
      if (line != "threshold,fraction") throw FormatError(label + ":1: expected header 'threshold,fraction'");
      continue;
    }
    const auto comma = line.find(',');
    const std::string where = label + ":" + std::to_string(n);
    if (comma == std::string::npos) throw FormatError(where + ": expected two comma-separated values");
    c.thresholds.push_back(detail::parse_double(line.substr(0, comma), where));
    c.fractions.push_back(detail::parse_double(line.substr(comma + 1), where));
  }
  if (c.thresholds.empty()) throw FormatError(label + ": curve has no rows");
  return c;
}

inline Json stats_json(const ErrorStats& s) {
  return {{"median", s.median}, {"mean", s.mean}, {"std", s.std}, {"count", s.count}};
}

/// Structured summary; per-image distance arrays only when `with_distances`.
inline Json report_json(const EvalReport& r, bool with_distances = false) {
  Json images = Json::array();
  for (const ImageResult& im : r.images) {
    Json j = {{"image_id", im.image_id}, {"challenge", im.challenge}, {"failed", im.failed}};
    if (im.failed) {
      j["failure"] = im.failure;
    } else {
      j["stats"] = stats_json(error_stats(im.distances));
      j["icp_iterations"] = im.icp_iterations;
      j["scale"] = im.transform.scale;
      if (with_distances) j["distances"] = im.distances;
    }
    images.push_back(j);
  }
  Json per = Json::object();
  for (const auto& [name, s] : r.per_challenge) per[name] = stats_json(s);
  return {{"overall", stats_json(r.overall)}, {"per_challenge", per}, {"failures", r.failures}, {"images", images}};
}

inline std::string xml_escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Cumulative error curves as a standalone SVG line chart.
inline std::string render_curves_svg(const std::vector<Curve>& curves, const std::string& title = "Cumulative error") {
  const double w = 640, h = 420, left = 60, right = 20, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  double xmax = 0.0;
  for (const Curve& c : curves)
    for (double t : c.thresholds) xmax = std::max(xmax, t);
  if (!(xmax > 0.0)) xmax = 1.0;
  auto sx = [&](double x) { return left + pw * x / xmax; };
  auto sy = [&](double y) { return top + ph * (1.0 - std::clamp(y, 0.0, 1.0)); };
  auto num = [](double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
    << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = i / 5.0, x = xmax * i / 5.0;
    s << "<line x1=\"" << left << "\" y1=\"" << num(sy(y)) << "\" x2=\"" << left + pw << "\" y2=\"" << num(sy(y))
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << num(sy(y) + 4) << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(y * 100) << "%</text>\n";
    s << "<text x=\"" << num(sx(x)) << "\" y=\"" << top + ph + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(x) << "</text>\n";
  }
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">Error (mm)</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = colors[c % 6];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curves[c].thresholds.size(); ++i)
      s << num(sx(curves[c].thresholds[i])) << ',' << num(sy(curves[c].fractions[i])) << ' ';
    s << "\"/>\n";
    const double ly = top + 18 + 16 * static_cast<double>(c);
    s << "<line x1=\"" << left + pw - 150 << "\" y1=\"" << ly << "\" x2=\"" << left + pw - 130 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << left + pw - 124 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << xml_escape(curves[c].label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream s;
  s << "ring,median_mm,mean_mm,std_mm,within_mean,cross_mean,margin_fraction,final_loss\n";
  for (const AblationRow& r : rows) {
    s << r.ring << ',' << detail::shortest(r.error.median) << ',' << detail::shortest(r.error.mean) << ','
      << detail::shortest(r.error.std) << ',';
    if (r.consistency)
      s << detail::shortest(r.consistency->within_mean) << ',' << detail::shortest(r.consistency->cross_mean) << ','
        << detail::shortest(r.consistency->margin_fraction) << ',';
    else
      s << ",,,";
    s << detail::shortest(r.final_loss) << '\n';
  }
  return s.str();
}

}  // namespace ringnet
