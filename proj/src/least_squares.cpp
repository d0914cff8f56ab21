#include "least_squares.hpp"

#include <cmath>

namespace nvtrap::detail {

LmResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0, int max_iterations,
                             double relative_tolerance) {
    LmResult out;
    out.x = std::move(x0);
    f(out.x, out.residuals, &out.jacobian);
    out.cost = out.residuals.squaredNorm();
    out.cost_history.push_back(out.cost);
    if (!std::isfinite(out.cost)) {
        out.message = "non-finite cost at the starting point";
        return out;
    }

    const Eigen::Index n = out.x.size();
    double lambda = 1e-3;
    constexpr double lambda_max = 1e16;
    Eigen::VectorXd r_trial;

    while (out.iterations < max_iterations) {
        ++out.iterations;
        if (out.cost == 0.0) {
            out.converged = true;
            out.message = "exact fit";
            return out;
        }
        const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
        const Eigen::VectorXd grad = out.jacobian.transpose() * out.residuals;
        Eigen::VectorXd scale = jtj.diagonal();
        const double floor = 1e-15 * std::max(scale.maxCoeff(), 1e-300);
        for (Eigen::Index i = 0; i < n; ++i) scale(i) = std::max(scale(i), floor);

        Eigen::MatrixXd lhs = jtj;
        lhs.diagonal() += lambda * scale;
        const Eigen::VectorXd step = lhs.ldlt().solve(-grad);
        const Eigen::VectorXd x_trial = out.x + step;

        bool accepted = false;
        double cost_trial = 0.0;
        if (step.allFinite()) {
            f(x_trial, r_trial, nullptr);
            cost_trial = r_trial.squaredNorm();
            accepted = std::isfinite(cost_trial) && cost_trial < out.cost;
        }

        if (accepted) {
            const double rel = (out.cost - cost_trial) / out.cost;
            out.x = x_trial;
            f(out.x, out.residuals, &out.jacobian);
            out.cost = out.residuals.squaredNorm();
            out.cost_history.push_back(out.cost);
            lambda = std::max(lambda / 10.0, 1e-12);
            if (rel < relative_tolerance) {
                out.converged = true;
                out.message = "relative cost change below tolerance";
                return out;
            }
        } else {
            lambda *= 10.0;
            if (lambda > lambda_max) {
                out.converged = true;
                out.message = "no further decrease at machine precision";
                return out;
            }
        }
    }
    out.message = "iteration limit reached";
    return out;
}

}  // namespace nvtrap::detail
