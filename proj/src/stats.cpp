#include "proscan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace proscan {

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double variance(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return ss / static_cast<double>(n - 1);
}

double standard_deviation(const std::vector<double>& values) {
    return std::sqrt(variance(values));
}

double poisson_pmf(std::uint64_t k, double mu) {
    if (mu <= 0.0) return k == 0 ? 1.0 : 0.0;
    const double kd = static_cast<double>(k);
    return std::exp(kd * std::log(mu) - mu - std::lgamma(kd + 1.0));
}

double chi_squared_pvalue(double chi2, int dof) {
    if (dof <= 0) throw std::invalid_argument("chi_squared_pvalue: dof must be positive");
    if (chi2 <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * chi2);
}

double ks_distance_uniform(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("ks_distance_uniform: empty input");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::fabs(samples[i] - lo));
        d = std::max(d, std::fabs(samples[i] - hi));
    }
    return d;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least 2 matched samples");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

PrincipalAxis principal_axis(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("principal_axis: need at least 2 points");
    PrincipalAxis axis;
    const double n = static_cast<double>(points.size());
    for (const auto& [px, py] : points) {
        axis.centroid_x += px;
        axis.centroid_y += py;
    }
    axis.centroid_x /= n;
    axis.centroid_y /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [px, py] : points) {
        const double dx = px - axis.centroid_x;
        const double dy = py - axis.centroid_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // Largest eigenvector of the 2x2 scatter matrix.
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    axis.dir_x = std::cos(theta);
    axis.dir_y = std::sin(theta);
    // Orient along increasing x when possible so downstream signs are stable.
    if (axis.dir_x < 0.0) {
        axis.dir_x = -axis.dir_x;
        axis.dir_y = -axis.dir_y;
    }
    return axis;
}

}  // namespace proscan
