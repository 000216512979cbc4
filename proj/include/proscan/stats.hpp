#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace proscan {

double mean(const std::vector<double>& values);

/// Unbiased sample variance (n-1 denominator); zero for n < 2.
double variance(const std::vector<double>& values);

double standard_deviation(const std::vector<double>& values);

/// Poisson probability mass function, computed in log space.
double poisson_pmf(std::uint64_t k, double mean);

/// Upper-tail p-value of a chi-squared statistic with the given degrees of freedom.
double chi_squared_pvalue(double chi2, int dof);

/// Kolmogorov distance between an empirical sample and the uniform [0,1] CDF.
double ks_distance_uniform(std::vector<double> samples);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Direction (unit vector) and centroid of the principal axis of a 2-D point
/// cloud. Orthogonal regression: equivariant under rigid motions.
struct PrincipalAxis {
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    double dir_x = 1.0;
    double dir_y = 0.0;
};

PrincipalAxis principal_axis(const std::vector<std::pair<double, double>>& points);

}  // namespace proscan
