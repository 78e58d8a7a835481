#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dwc/error.hpp"

namespace dwc::io {

/// Ordered key/value metadata written as "# key=value" lines.
using Meta = std::vector<std::pair<std::string, std::string>>;

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

inline std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
    return out;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const Meta& meta, const std::vector<std::string>& columns)
        : out_(open_out(path)), ncols_(columns.size()) {
        for (const auto& [k, v] : meta) out_ << "# " << k << '=' << v << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        if (values.size() != ncols_) fail(ErrorCode::DimensionMismatch, "csv row has the wrong number of fields");
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt(values[i]);
        out_ << '\n';
    }

    void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

    void comment(const std::string& line) { out_ << "# " << line << '\n'; }

private:
    std::ofstream out_;
    std::size_t ncols_;
};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool logx = false;
    bool logy = false;
};

/// Polyline plot, one path per series.
inline void write_svg(const std::filesystem::path& path, const PlotSpec& spec, const std::vector<Series>& series) {
    constexpr double W = 640, H = 420, L = 70, R = 20, Tm = 40, B = 50;
    auto tx = [&](double v) { return spec.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            x0 = std::min(x0, a);
            x1 = std::max(x1, a);
            y0 = std::min(y0, b);
            y1 = std::max(y1, b);
        }
    if (!(x1 >= x0)) x0 = 0, x1 = 1;
    if (!(y1 >= y0)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double a) { return L + (a - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double b) { return H - B - (b - y0) / (y1 - y0) * (H - Tm - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ofstream out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << spec.title << "</text>\n";
    out << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - R << "\" height=\"" << H - Tm - B
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << spec.xlabel << (spec.logx ? " (log10)" : "") << "</text>\n";
    out << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2 << ")\">"
        << spec.ylabel << (spec.logy ? " (log10)" : "") << "</text>\n";
    out << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-size=\"10\">" << fmt_short(x0) << "</text>\n";
    out << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" font-size=\"10\" text-anchor=\"end\">"
        << fmt_short(x1) << "</text>\n";
    out << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" font-size=\"10\" text-anchor=\"end\">" << fmt_short(y0)
        << "</text>\n";
    out << "<text x=\"" << L - 4 << "\" y=\"" << Tm + 10 << "\" font-size=\"10\" text-anchor=\"end\">"
        << fmt_short(y1) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* c = colors[k % 6];
        out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            out << fmt_short(px(a)) << ',' << fmt_short(py(b)) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << L + 8 << "\" y=\"" << Tm + 16 + 14 * k << "\" font-size=\"11\" fill=\"" << c << "\">"
            << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

inline void write_manifest(const std::filesystem::path& path, const Meta& meta,
                           const std::vector<std::string>& artifacts) {
    std::ofstream out = open_out(path);
    for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
    for (const auto& a : artifacts) out << "artifact=" << a << '\n';
}

}  // namespace dwc::io
