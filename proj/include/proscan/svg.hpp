#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace proscan {

/// Minimal SVG line/scatter chart writer for scenario result bundles.
class SvgChart {
public:
    SvgChart(std::string title, std::string x_label, std::string y_label);

    void add_line(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& color = "#1f6fb2");
    void add_scatter(const std::vector<double>& x, const std::vector<double>& y,
                     const std::string& color = "#c23b22");

    void write(const std::filesystem::path& path) const;

private:
    struct Series {
        std::vector<double> x;
        std::vector<double> y;
        std::string color;
        bool scatter;
    };
    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
};

}  // namespace proscan
