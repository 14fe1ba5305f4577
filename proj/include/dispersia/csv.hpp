#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace dispersia {

// In-memory CSV with numeric columns. An absent value models a field that
// was requested but could not be computed (infeasible grid points).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::optional<double>>> rows;
};

// Decimal rendering contract: 12 significant digits, infinities spelled
// "inf" / "-inf". A value that went through write -> read -> write produces
// the same bytes both times.
std::string format_csv_value(double v);

void write_csv(const std::string& path, const CsvTable& table);

// Reads a CSV produced by write_csv. Empty fields come back as nullopt;
// malformed numbers throw std::invalid_argument.
CsvTable read_csv(const std::string& path);

// One polyline in a fixed 640x480 frame, autoscaled to the data. A viewing
// convenience only; nonfinite points are dropped.
void write_svg_polyline(const std::string& path, const std::vector<std::array<double, 2>>& points);

} // namespace dispersia
