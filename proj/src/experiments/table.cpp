#include "ctap/experiments/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ctap::experiments {

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

std::string xml_escape(const std::string& s) {
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

const char* const kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

}  // namespace

ResultTable::ResultTable(std::string name_, std::vector<std::string> columns_)
    : name(std::move(name_)), columns(std::move(columns_)) {}

void ResultTable::add_row(std::vector<double> row) {
    if (row.size() != columns.size())
        throw std::invalid_argument("table '" + name + "' row has " + std::to_string(row.size()) + " values for " +
                                    std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

void ResultTable::set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : metadata)
        if (k == key) {
            v = value;
            return;
        }
    metadata.emplace_back(key, value);
}

void ResultTable::set_meta(const std::string& key, double value) { set_meta(key, format_number(value)); }

std::vector<double> ResultTable::column(const std::string& col) const {
    const auto it = std::find(columns.begin(), columns.end(), col);
    if (it == columns.end()) throw std::out_of_range("table '" + name + "' has no column '" + col + "'");
    const auto idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[idx]);
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string ResultTable::to_csv() const {
    std::string out;
    for (const auto& [k, v] : metadata) out += "# " + k + ": " + v + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_number(r[i]);
        out += "\n";
    }
    return out;
}

void ResultTable::write_csv(const std::string& path) const { write_file(path, to_csv()); }

std::string Plot::to_svg() const {
    const double width = 640, height = 420, left = 70, right = 150, top = 40, bottom = 55;
    const double pw = width - left - right, ph = height - top - bottom;
    const auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
    const auto ty = [&](double y) { return log_y ? std::log10(y) : y; };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if ((log_x && !(s.x[i] > 0)) || (log_y && !(s.y[i] > 0))) continue;
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!(x1 >= x0)) x0 = 0, x1 = 1;
    if (!(y1 >= y0)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * pw; };
    const auto py = [&](double y) { return top + ph - (ty(y) - y0) / (y1 - y0) * ph; };

    std::ostringstream s;
    s.precision(6);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    const auto tick_label = [](double v, bool log) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", log ? std::pow(10.0, v) : v);
        return std::string(buf);
    };
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        const double gx = left + pw * i / 4.0, gy = top + ph - ph * i / 4.0;
        s << "<text x=\"" << gx << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << tick_label(fx, log_x)
          << "</text>\n";
        s << "<text x=\"" << left - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">" << tick_label(fy, log_y)
          << "</text>\n";
    }
    s << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << xml_escape(x_label) << "</text>\n";
    s << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    for (double m : x_markers) {
        if (log_x && !(m > 0)) continue;
        const double x = px(m);
        if (x < left || x > left + pw) continue;
        s << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << top + ph
          << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& sr = series[k];
        const char* colour = kColours[k % (sizeof kColours / sizeof *kColours)];
        s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < sr.x.size() && i < sr.y.size(); ++i) {
            if ((log_x && !(sr.x[i] > 0)) || (log_y && !(sr.y[i] > 0))) continue;
            if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
            s << px(sr.x[i]) << "," << py(sr.y[i]) << " ";
        }
        s << "\"/>\n";
        const double ly = top + 14 + 16.0 * static_cast<double>(k);
        s << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30 << "\" y2=\""
          << ly - 4 << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly << "\">" << xml_escape(sr.label) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void Plot::write_svg(const std::string& path) const { write_file(path, to_svg()); }

}  // namespace ctap::experiments
