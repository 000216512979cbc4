#pragma once

#include <functional>

#include <Eigen/Dense>

namespace proscan {

struct LmOptions {
    int max_iterations = 200;
    double gradient_tol = 1e-12;
    double step_tol = 1e-14;
    double initial_damping = 1e-3;
};

struct LmResult {
    Eigen::VectorXd params;
    double cost = 0.0;  // 0.5 * sum of squared residuals
    int iterations = 0;
    bool converged = false;
    Eigen::MatrixXd covariance;  // (J^T J)^-1 at the solution, unscaled
};

/// Dense Levenberg-Marquardt with a forward-difference Jacobian.
///
/// `residuals(p, r)` must fill r with the residual vector for parameters p;
/// its length is fixed by the first call. Deterministic for identical inputs.
LmResult lm_fit(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residuals,
                Eigen::VectorXd initial, const LmOptions& options = {});

/// Minimizes a smooth 1-D function by golden-section search on [lo, hi].
double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                               double tol);

}  // namespace proscan
