#ifndef NVTRAP_LEAST_SQUARES_HPP
#define NVTRAP_LEAST_SQUARES_HPP

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nvtrap::detail {

// Fills residuals and, when the pointer is non-null, the Jacobian.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac)>;

struct LmResult {
    Eigen::VectorXd x;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double cost = 0.0;  // sum of squared residuals
    int iterations = 0;
    bool converged = false;
    std::string message;
    std::vector<double> cost_history;
};

// Levenberg-Marquardt with Marquardt's diagonal scaling. Stops when an
// accepted step changes the cost by less than `relative_tolerance`, when the
// cost reaches zero, or when the damping saturates without finding a lower
// cost (a stationary point at machine precision); all three count as
// converged. Hitting `max_iterations` does not.
LmResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0, int max_iterations,
                             double relative_tolerance);

}  // namespace nvtrap::detail

#endif
