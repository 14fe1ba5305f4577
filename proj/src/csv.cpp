#include "dispersia/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dispersia {

std::string format_csv_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open for writing: " + path);
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << ',';
        out << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            if (row[i]) out << format_csv_value(*row[i]);
        }
        out << '\n';
    }
    if (!out) throw std::invalid_argument("write failed: " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open for reading: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty csv: " + path);
    table.header = split_fields(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::optional<double>> row;
        for (const auto& field : split_fields(line)) {
            if (field.empty()) {
                row.push_back(std::nullopt);
                continue;
            }
            const char* s = field.c_str();
            char* end = nullptr;
            const double v = std::strtod(s, &end);
            if (end == s || *end != '\0') {
                throw std::invalid_argument("bad csv number '" + field + "' in " + path);
            }
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_svg_polyline(const std::string& path, const std::vector<std::array<double, 2>>& points) {
    std::vector<std::array<double, 2>> finite;
    for (const auto& p : points) {
        if (std::isfinite(p[0]) && std::isfinite(p[1])) finite.push_back(p);
    }
    const double w = 640.0, h = 480.0, pad = 40.0;
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (!finite.empty()) {
        x0 = x1 = finite[0][0];
        y0 = y1 = finite[0][1];
        for (const auto& p : finite) {
            x0 = std::min(x0, p[0]);
            x1 = std::max(x1, p[0]);
            y0 = std::min(y0, p[1]);
            y1 = std::max(y1, p[1]);
        }
    }
    if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
    if (y1 - y0 < 1e-12) y1 = y0 + 1.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (finite.size() >= 2) {
        svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : finite) {
            const double sx = pad + (p[0] - x0) / (x1 - x0) * (w - 2 * pad);
            const double sy = h - pad - (p[1] - y0) / (y1 - y0) * (h - 2 * pad);
            svg << format_csv_value(sx) << ',' << format_csv_value(sy) << ' ';
        }
        svg << "\"/>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open for writing: " + path);
    out << svg.str();
}

} // namespace dispersia
