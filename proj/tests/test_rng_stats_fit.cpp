#include <doctest.h>

#include <cmath>
#include <vector>

#include "proscan/fit.hpp"
#include "proscan/rng.hpp"
#include "proscan/stats.hpp"

using namespace proscan;

TEST_CASE("rng streams are deterministic and independent") {
    Rng a(1234, "module.a");
    Rng a2(1234, "module.a");
    Rng b(1234, "module.b");
    bool identical = true, differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        identical = identical && (va == a2.next_u64());
        differs = differs || (va != b.next_u64());
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("uniform lies in [0,1) and has the right mean") {
    Rng rng(7, "uniform");
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::fabs(sum / 100000 - 0.5) < 0.005);
}

TEST_CASE("normal moments") {
    Rng rng(8, "normal");
    std::vector<double> xs(200000);
    for (auto& x : xs) x = rng.normal();
    CHECK(std::fabs(mean(xs)) < 0.01);
    CHECK(std::fabs(standard_deviation(xs) - 1.0) < 0.01);
}

TEST_CASE("poisson mean and variance across both sampling regimes") {
    for (double lambda : {0.5, 4.0, 25.0, 240.0}) {
        Rng rng(9, "poisson");
        std::vector<double> xs(100000);
        for (auto& x : xs) x = static_cast<double>(rng.poisson(lambda));
        const double m = mean(xs);
        const double v = variance(xs);
        CHECK(std::fabs(m - lambda) < 5.0 * std::sqrt(lambda / 100000.0));
        CHECK(std::fabs(v / m - 1.0) < 0.05);
    }
}

TEST_CASE("exponential mean") {
    Rng rng(10, "exp");
    std::vector<double> xs(100000);
    for (auto& x : xs) x = rng.exponential(2.0);
    CHECK(std::fabs(mean(xs) - 0.5) < 0.01);
}

TEST_CASE("chi-squared p-value matches known quantiles") {
    // Median of chi2 with k dof is roughly k(1-2/(9k))^3.
    CHECK(chi_squared_pvalue(0.4549, 1) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(chi_squared_pvalue(4.351, 5) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(chi_squared_pvalue(3.841, 1) == doctest::Approx(0.05).epsilon(0.01));
}

TEST_CASE("ks distance of a perfect uniform grid is small") {
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back((i + 0.5) / 1000.0);
    CHECK(ks_distance_uniform(xs) < 0.002);
}

TEST_CASE("line fit recovers exact coefficients") {
    std::vector<double> x, y;
    for (int i = 0; i < 50; ++i) {
        x.push_back(i);
        y.push_back(3.5 * i - 2.25);
    }
    const LineFit f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(-2.25).epsilon(1e-9));
}

TEST_CASE("levenberg-marquardt solves a nonlinear least squares problem") {
    // y = a * exp(-b x) sampled exactly; the fit must recover (a, b).
    std::vector<double> xs, ys;
    for (int i = 0; i < 40; ++i) {
        xs.push_back(0.1 * i);
        ys.push_back(3.0 * std::exp(-0.7 * 0.1 * i));
    }
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        r.resize(static_cast<Eigen::Index>(xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = p[0] * std::exp(-p[1] * xs[i]) - ys[i];
    };
    Eigen::VectorXd p0(2);
    p0 << 1.0, 0.1;
    const LmResult res = lm_fit(residuals, p0);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(res.params[1] == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(res.cost < 1e-16);
}

TEST_CASE("golden section finds a quadratic minimum") {
    const double x = golden_section_minimize([](double v) { return (v - 1.7) * (v - 1.7); }, -5.0,
                                             5.0, 1e-9);
    CHECK(x == doctest::Approx(1.7).epsilon(1e-6));
}
