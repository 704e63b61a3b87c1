#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cmftool {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginL = 70, kMarginR = 140, kMarginT = 40, kMarginB = 50;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf"};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

}  // namespace

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const auto px = [&](double x) {
        return kMarginL + (x - xmin) / (xmax - xmin) * (kWidth - kMarginL - kMarginR);
    };
    const auto py = [&](double y) {
        return kHeight - kMarginB -
               (y - ymin) / (ymax - ymin) * (kHeight - kMarginT - kMarginB);
    };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write chart: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    out << "<line x1=\"" << kMarginL << "\" y1=\"" << kHeight - kMarginB << "\" x2=\""
        << kWidth - kMarginR << "\" y2=\"" << kHeight - kMarginB << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
        << "\" y2=\"" << kHeight - kMarginB << "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        out << "<line x1=\"" << px(xv) << "\" y1=\"" << kHeight - kMarginB << "\" x2=\""
            << px(xv) << "\" y2=\"" << kHeight - kMarginB + 5 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << px(xv) << "\" y=\"" << kHeight - kMarginB + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << fmt(xv) << "</text>\n";
        out << "<line x1=\"" << kMarginL - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << kMarginL
            << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << kMarginL - 8 << "\" y=\"" << py(yv) + 3
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
            << fmt(yv) << "</text>\n";
    }
    out << "<text x=\"" << (kMarginL + kWidth - kMarginR) / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << (kMarginT + kHeight - kMarginB) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 18 " << (kMarginT + kHeight - kMarginB) / 2 << ")\">"
        << y_label << "</text>\n";

    int color = 0;
    for (const auto& s : series) {
        const char* c = kColors[color % 7];
        out << "<polyline fill=\"none\" stroke=\"" << c
            << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
                << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
        const int ly = kMarginT + 16 + 18 * color;
        out << "<line x1=\"" << kWidth - kMarginR + 10 << "\" y1=\"" << ly << "\" x2=\""
            << kWidth - kMarginR + 30 << "\" y2=\"" << ly << "\" stroke=\"" << c
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << kWidth - kMarginR + 35 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        ++color;
    }
    out << "</svg>\n";
}

}  // namespace cmftool
