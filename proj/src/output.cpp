#include "kdyn/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "kdyn/errors.hpp"

namespace kdyn {

namespace {

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& metadata,
               const std::vector<CsvColumn>& columns) {
  os << "#";
  for (const auto& [k, v] : metadata) os << ' ' << k << '=' << v;
  os << '\n';
  std::size_t rows = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) os << ',';
    os << columns[c].name;
    rows = std::max(rows, columns[c].values.size());
  }
  os << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) os << ',';
      if (r < columns[c].values.size()) os << shortest(columns[c].values[r]);
    }
    os << '\n';
  }
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, t.metadata_line) || t.metadata_line.rfind("#", 0) != 0) {
    throw InputError("CSV lacks a metadata line");
  }
  if (!std::getline(is, line)) throw InputError("CSV lacks a header row");
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_svg_plot(std::ostream& os, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<PlotSeries>& series, bool log_x) {
  const double W = 760, H = 480, left = 80, right = 190, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0.0);
  };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      const double x = log_x ? std::log10(s.x[i]) : s.x[i];
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  ymin = std::min(ymin, 0.0);
  if (ymax <= ymin) ymax = ymin + 1;
  ymax += 0.05 * (ymax - ymin);
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // x ticks: integer decades for log axes, 5 even ticks otherwise.
  std::vector<double> xt;
  if (log_x) {
    for (double e = std::ceil(xmin); e <= std::floor(xmax); e += 1.0) xt.push_back(e);
  }
  if (xt.size() < 2) {
    xt.clear();
    for (int i = 0; i <= 5; ++i) xt.push_back(xmin + (xmax - xmin) * i / 5.0);
  }
  for (double x : xt) {
    const double X = px(x);
    os << "<line x1=\"" << fixed(X) << "\" y1=\"" << top + ph << "\" x2=\"" << fixed(X) << "\" y2=\""
       << top + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(X) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\">"
       << tick_label(log_x ? std::pow(10.0, x) : x) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double y = ymin + (ymax - ymin) * i / 5.0;
    const double Y = py(y);
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << fixed(Y) << "\" x2=\"" << left << "\" y2=\"" << fixed(Y)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << fixed(Y + 4) << "\" text-anchor=\"end\">" << tick_label(y)
       << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
     << escape_xml(x_label) << "</text>\n";
  os << "<text transform=\"translate(20," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape_xml(y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"";
    if (s.dashed) os << " stroke-dasharray=\"6,4\"";
    os << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      if (!first) os << ' ';
      first = false;
      os << fixed(px(log_x ? std::log10(s.x[i]) : s.x[i])) << ',' << fixed(py(s.y[i]));
    }
    os << "\"/>\n";
    const double ly = top + 15 + 20.0 * static_cast<double>(si);
    const double lx = left + pw + 15;
    os << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 25 << "\" y2=\"" << ly
       << "\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
       << "/>\n";
    os << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.name) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  const std::string tmp = path + ".partial";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw InputError("cannot open '" + tmp + "' for writing");
      writer(out);
      out.flush();
      if (!out) throw InputError("write to '" + tmp + "' failed");
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

std::string replace_extension(const std::string& path, const std::string& ext) {
  std::filesystem::path p(path);
  p.replace_extension(ext);
  return p.string();
}

}  // namespace kdyn
