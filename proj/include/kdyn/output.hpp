#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace kdyn {

struct CsvColumn {
  std::string name;
  std::vector<double> values;  // empty: column reported absent (blank cells)
};

// "# k1=v1 k2=v2 ..." followed by a header row and one row per entry.
// Numbers use the shortest round-trip representation.
void write_csv(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& metadata,
               const std::vector<CsvColumn>& columns);

struct CsvTable {
  std::string metadata_line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // blank cells read as NaN
};
CsvTable read_csv(std::istream& is);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  bool dashed = false;
};

// Line plot with axes, ticks and legend. Non-finite or (for log x) nonpositive
// points are skipped.
void write_svg_plot(std::ostream& os, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<PlotSeries>& series, bool log_x);

// Writes through a temporary sibling file and renames it into place; the
// temporary is removed if writer throws.
void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer);

// path with its extension replaced (or appended).
std::string replace_extension(const std::string& path, const std::string& ext);

}  // namespace kdyn
