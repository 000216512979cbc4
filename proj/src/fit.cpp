#include "proscan/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace proscan {

namespace {

void numeric_jacobian(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& f,
                      const Eigen::VectorXd& p, const Eigen::VectorXd& r0, Eigen::MatrixXd& jac) {
    const double cbrt_eps = std::cbrt(2.220446049250313e-16);
    Eigen::VectorXd probe = p;
    Eigen::VectorXd r_plus(r0.size());
    Eigen::VectorXd r_minus(r0.size());
    for (int j = 0; j < p.size(); ++j) {
        const double h = cbrt_eps * std::max(1.0, std::fabs(p[j]));
        probe[j] = p[j] + h;
        f(probe, r_plus);
        probe[j] = p[j] - h;
        f(probe, r_minus);
        jac.col(j) = (r_plus - r_minus) / (2.0 * h);
        probe[j] = p[j];
    }
}

}  // namespace

LmResult lm_fit(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residuals,
                Eigen::VectorXd initial, const LmOptions& options) {
    LmResult result;
    Eigen::VectorXd p = std::move(initial);
    Eigen::VectorXd r;
    residuals(p, r);
    if (r.size() == 0) throw std::invalid_argument("lm_fit: empty residual vector");
    const int m = static_cast<int>(r.size());
    const int n = static_cast<int>(p.size());

    Eigen::MatrixXd jac(m, n);
    double cost = 0.5 * r.squaredNorm();
    double damping = options.initial_damping;
    bool jacobian_fresh = false;

    numeric_jacobian(residuals, p, r, jac);
    jacobian_fresh = true;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter + 1;
        if (!jacobian_fresh) {
            numeric_jacobian(residuals, p, r, jac);
            jacobian_fresh = true;
        }
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd g = jac.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
            result.converged = true;
            break;
        }
        // Try damped steps, growing damping until the cost decreases.
        bool stepped = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd a = jtj;
            for (int d = 0; d < n; ++d) a(d, d) += damping * std::max(jtj(d, d), 1e-12);
            Eigen::VectorXd step = a.ldlt().solve(-g);
            if (!step.allFinite()) {
                damping *= 10.0;
                continue;
            }
            Eigen::VectorXd p_try = p + step;
            Eigen::VectorXd r_try(m);
            residuals(p_try, r_try);
            const double cost_try = 0.5 * r_try.squaredNorm();
            if (std::isfinite(cost_try) && cost_try < cost) {
                const double step_size = step.norm();
                p = std::move(p_try);
                r = std::move(r_try);
                cost = cost_try;
                damping = std::max(damping * 0.3, 1e-12);
                jacobian_fresh = false;
                stepped = true;
                if (step_size < options.step_tol * (p.norm() + options.step_tol)) {
                    result.converged = true;
                }
                break;
            }
            damping *= 10.0;
        }
        if (!stepped) {
            // No productive step at any damping: treat the current point as a
            // (possibly rough) stationary point.
            result.converged = true;
            break;
        }
        if (result.converged) break;
    }

    result.params = p;
    result.cost = cost;
    if (!jacobian_fresh) numeric_jacobian(residuals, p, r, jac);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    result.covariance = jtj.completeOrthogonalDecomposition().pseudoInverse();
    return result;
}

double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                               double tol) {
    if (!(hi > lo)) throw std::invalid_argument("golden_section_minimize: bad bracket");
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace proscan
