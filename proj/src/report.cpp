#include "streampca/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

namespace streampca {

namespace {

// shortest round-trip representation, stable across runs
std::string num(double v) { return fmt::format("{}", v); }

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t cut = line.find(',', start);
    out.push_back(line.substr(start, cut - start));
    if (cut == std::string_view::npos) return out;
    start = cut + 1;
  }
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void write_trials_csv(std::ostream& out, std::span<const TrialRecord> records,
                      std::span<const std::uint64_t> checkpoints) {
  out << kTrialsHeader << '\n';
  for (const auto& r : records) {
    for (std::size_t j = 0; j < checkpoints.size(); ++j) {
      const auto& e = j < r.errors.size() ? r.errors[j] : std::optional<double>{};
      out << r.config_id << ',' << r.trial << ',' << r.seed << ',' << checkpoints[j] << ','
          << (e ? num(*e) : std::string()) << ',' << to_string(r.status) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const ExperimentSummary& summary) {
  out << kSummaryHeader << '\n';
  for (const auto& cs : summary.configs) {
    for (std::size_t j = 0; j < summary.checkpoints.size(); ++j) {
      const CheckpointStats& s = cs.stats[j];
      out << cs.config_id << ',' << summary.checkpoints[j] << ','
          << (s.count ? num(s.mean) : std::string()) << ','
          << (s.count ? num(s.stderr_mean) : std::string()) << ',' << s.count << '\n';
    }
  }
}

void write_best_csv(std::ostream& out, const ExperimentSummary& summary) {
  out << kBestHeader << '\n';
  for (const auto& b : summary.best) {
    out << b.checkpoint << ',' << to_string(b.algorithm) << ',' << b.config_id << ','
        << num(b.stats.mean) << ',' << num(b.stats.stderr_mean) << ',' << b.stats.count << '\n';
  }
}

void write_comparisons_csv(std::ostream& out, const ExperimentSummary& summary) {
  out << kComparisonsHeader << '\n';
  for (const auto& c : summary.comparisons) {
    out << c.checkpoint << ',' << c.config_a << ',' << c.config_b << ',' << num(c.test.t) << ','
        << num(c.test.df) << ',' << num(c.test.p_two_sided) << ','
        << (c.significant ? "yes" : "no") << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("summary CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSummaryHeader) {
    throw CsvError(fmt::format("summary CSV header must be '{}', got '{}'", kSummaryHeader, line));
  }

  auto parse_double = [](std::string_view s, double& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
  };
  auto parse_u64 = [](std::string_view s, std::uint64_t& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return !s.empty() && ec == std::errc() && p == s.data() + s.size();
  };

  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 5) {
      throw CsvError(fmt::format("summary CSV line {}: expected 5 fields", line_no));
    }
    SummaryRow row;
    row.config_id = std::string(fields[0]);
    std::uint64_t count = 0;
    if (row.config_id.empty() || !parse_u64(fields[1], row.checkpoint) ||
        !parse_u64(fields[4], count)) {
      throw CsvError(fmt::format("summary CSV line {}: malformed row", line_no));
    }
    row.count = static_cast<std::size_t>(count);
    if (row.count == 0) continue;
    if (!parse_double(fields[2], row.mean) || !parse_double(fields[3], row.stderr_mean) ||
        !std::isfinite(row.mean) || !std::isfinite(row.stderr_mean)) {
      throw CsvError(fmt::format("summary CSV line {}: malformed mean or stderr", line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("summary CSV has no data rows");
  return rows;
}

std::string render_svg(std::span<const SummaryRow> rows, const PlotOptions& options) {
  if (rows.empty()) throw CsvError("nothing to plot");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const SummaryRow*>> series;
  for (const auto& r : rows) {
    auto [it, inserted] = series.try_emplace(r.config_id);
    if (inserted) order.push_back(r.config_id);
    it->second.push_back(&r);
  }
  for (auto& [id, pts] : series) {
    std::sort(pts.begin(), pts.end(),
              [](const SummaryRow* a, const SummaryRow* b) { return a->checkpoint < b->checkpoint; });
  }

  double xmin = static_cast<double>(rows.front().checkpoint);
  double xmax = xmin;
  double ymax = 0.0;
  for (const auto& r : rows) {
    xmin = std::min(xmin, static_cast<double>(r.checkpoint));
    xmax = std::max(xmax, static_cast<double>(r.checkpoint));
    ymax = std::max(ymax, r.mean + r.stderr_mean);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax <= 0.0) ymax = 1.0;

  const double left = 70.0;
  const double right = 220.0;
  const double top = 40.0;
  const double bottom = 50.0;
  const double plot_w = options.width - left - right;
  const double plot_h = options.height - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
  // SVG y grows downward, so larger errors sit higher
  auto py = [&](double y) { return top + (1.0 - y / ymax) * plot_h; };

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\">\n",
      options.width, options.height);
  svg += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", options.width,
                     options.height);
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
      "text-anchor=\"middle\">{}</text>\n",
      left + plot_w / 2.0, xml_escape(options.title));

  // axes and ticks
  svg += fmt::format(
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n",
      left, top + plot_h, left + plot_w);
  svg += fmt::format(
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
      left, top, top + plot_h);
  for (int t = 0; t <= 5; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 5.0;
    const double yv = ymax * t / 5.0;
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" "
        "text-anchor=\"middle\">{:g}</text>\n",
        px(xv), top + plot_h + 16.0, xv);
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" "
        "text-anchor=\"end\">{:.3g}</text>\n",
        left - 6.0, py(yv) + 4.0, yv);
  }
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"13\" "
      "text-anchor=\"middle\">samples</text>\n",
      left + plot_w / 2.0, options.height - 12.0);
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"13\" "
      "text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">mean spectral error</text>\n",
      top + plot_h / 2.0, top + plot_h / 2.0);

  for (std::size_t s = 0; s < order.size(); ++s) {
    const auto& pts = series.at(order[s]);
    const char* color = kPalette[s % std::size(kPalette)];
    std::string band;
    for (const SummaryRow* p : pts) {
      band += fmt::format("{:.2f},{:.2f} ", px(static_cast<double>(p->checkpoint)),
                          py(p->mean + p->stderr_mean));
    }
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      band += fmt::format("{:.2f},{:.2f} ", px(static_cast<double>((*it)->checkpoint)),
                          py(std::max(0.0, (*it)->mean - (*it)->stderr_mean)));
    }
    band.pop_back();
    svg += fmt::format("<polygon class=\"band\" points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" "
                       "stroke=\"none\"/>\n",
                       band, color);

    std::string line;
    for (const SummaryRow* p : pts) {
      line += fmt::format("{:.2f},{:.2f} ", px(static_cast<double>(p->checkpoint)), py(p->mean));
    }
    line.pop_back();
    svg += fmt::format(
        "<polyline class=\"series\" data-config=\"{}\" points=\"{}\" fill=\"none\" "
        "stroke=\"{}\" stroke-width=\"1.8\"/>\n",
        xml_escape(order[s]), line, color);

    const double ly = top + 14.0 + 18.0 * static_cast<double>(s);
    const double lx = left + plot_w + 16.0;
    svg += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
        "stroke-width=\"3\"/>\n",
        lx, ly, lx + 20.0, ly, color);
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        lx + 26.0, ly + 4.0, xml_escape(order[s]));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace streampca
