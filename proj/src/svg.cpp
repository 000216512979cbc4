#include "proscan/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace proscan {

SvgChart::SvgChart(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgChart::add_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::string& color) {
    if (x.size() != y.size()) throw std::invalid_argument("SvgChart: mismatched series");
    series_.push_back({x, y, color, false});
}

void SvgChart::add_scatter(const std::vector<double>& x, const std::vector<double>& y,
                           const std::string& color) {
    if (x.size() != y.size()) throw std::invalid_argument("SvgChart: mismatched series");
    series_.push_back({x, y, color, true});
}

void SvgChart::write(const std::filesystem::path& path) const {
    const double width = 640.0, height = 420.0;
    const double ml = 70.0, mr = 20.0, mt = 40.0, mb = 55.0;

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const auto& s : series_)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (first) {
                x_min = x_max = s.x[i];
                y_min = y_max = s.y[i];
                first = false;
            } else {
                x_min = std::min(x_min, s.x[i]);
                x_max = std::max(x_max, s.x[i]);
                y_min = std::min(y_min, s.y[i]);
                y_max = std::max(y_max, s.y[i]);
            }
        }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;

    auto sx = [&](double v) { return ml + (v - x_min) / (x_max - x_min) * (width - ml - mr); };
    auto sy = [&](double v) { return height - mb - (v - y_min) / (y_max - y_min) * (height - mt - mb); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << title_ << "</text>\n";

    // Axes with 5 ticks each.
    out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
        << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x_min + (x_max - x_min) * i / 4.0;
        const double fy = y_min + (y_max - y_min) * i / 4.0;
        out << "<line x1=\"" << sx(fx) << "\" y1=\"" << height - mb << "\" x2=\"" << sx(fx)
            << "\" y2=\"" << height - mb + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << sx(fx) << "\" y=\"" << height - mb + 20
            << "\" text-anchor=\"middle\" font-size=\"11\">" << std::defaultfloat << fx
            << "</text>\n";
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << ml << "\" y2=\""
            << sy(fy) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fy << "</text>\n";
    }
    out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label_ << "</text>\n";
    out << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << (mt + height - mb) / 2 << ")\">" << y_label_ << "</text>\n";

    for (const auto& s : series_) {
        if (s.scatter) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                out << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i])
                    << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
            }
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                out << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
            }
            out << "\"/>\n";
        }
    }
    out << "</svg>\n";

    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + path.string());
    file << out.str();
}

}  // namespace proscan
