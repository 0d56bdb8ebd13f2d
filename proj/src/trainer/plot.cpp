// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/trainer/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace smi::train {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_acc_svg(const AblationReport& report, const PlotOptions& opt) {
  std::vector<std::string> names;
  std::map<std::string, std::vector<const AblationRun*>> by;
  std::size_t max_epochs = 1;
  for (const auto& r : report.runs) {
    if (!by.count(r.condition)) names.push_back(r.condition);
    by[r.condition].push_back(&r);
    max_epochs = std::max(max_epochs, r.metrics.curve.size());
  }

  const double left = 60, right = 170, top = 40, bottom = 50;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  auto X = [&](double epoch) { return left + pw * (max_epochs > 1 ? (epoch - 1) / double(max_epochs - 1) : 0.5); };
  auto Y = [&](double acc) { return top + ph * (1.0 - std::clamp(acc, 0.0, 1.0)); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
     << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">" << escape(opt.title) << "</text>\n";
  os << "<g class=\"axes\" stroke=\"#444\" fill=\"none\">\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph << "\"/>\n";
  os << "</g>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double a = i / 10.0;
    os << "<line x1=\"" << left - 4 << "\" x2=\"" << left << "\" y1=\"" << fmt(Y(a)) << "\" y2=\"" << fmt(Y(a))
       << "\" stroke=\"#444\"/><text x=\"" << left - 8 << "\" y=\"" << fmt(Y(a) + 4)
       << "\" text-anchor=\"end\">" << fmt(a) << "</text>\n";
  }
  const std::size_t step = std::max<std::size_t>(1, max_epochs / 8);
  for (std::size_t e = 1; e <= max_epochs; e += step)
    os << "<text x=\"" << fmt(X(double(e))) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << e
       << "</text>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 10 << "\" text-anchor=\"middle\">epoch</text>\n";
  os << "<text transform=\"translate(16 " << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">ACC</text>\n";
  if (opt.reference > 0)
    os << "<line class=\"reference\" x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << fmt(Y(opt.reference))
       << "\" y2=\"" << fmt(Y(opt.reference)) << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";

  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto& runs = by[names[k]];
    const char* colour = kPalette[k % std::size(kPalette)];
    std::size_t epochs = runs.front()->metrics.curve.size();
    for (const auto* r : runs) epochs = std::min(epochs, r->metrics.curve.size());
    std::vector<double> lo(epochs, 1.0), hi(epochs, 0.0), mean(epochs, 0.0);
    for (std::size_t e = 0; e < epochs; ++e) {
      for (const auto* r : runs) {
        const double a = r->metrics.curve[e].valid_acc;
        lo[e] = std::min(lo[e], a);
        hi[e] = std::max(hi[e], a);
        mean[e] += a / double(runs.size());
      }
    }
    os << "<g class=\"condition\" data-name=\"" << escape(names[k]) << "\">\n";
    if (epochs > 0) {
      os << "<polygon class=\"spread\" fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t e = 0; e < epochs; ++e) os << fmt(X(double(e + 1))) << ',' << fmt(Y(hi[e])) << ' ';
      for (std::size_t e = epochs; e-- > 0;) os << fmt(X(double(e + 1))) << ',' << fmt(Y(lo[e])) << ' ';
      os << "\"/>\n<polyline class=\"mean\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
      for (std::size_t e = 0; e < epochs; ++e) os << fmt(X(double(e + 1))) << ',' << fmt(Y(mean[e])) << ' ';
      os << "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * double(k);
    os << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 36 << "\" y1=\"" << ly << "\" y2=\"" << ly
       << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/><text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4
       << "\">" << escape(names[k]) << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace smi::train
