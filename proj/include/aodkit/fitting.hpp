#pragma once

// Small least-squares helpers shared by the virtual-lab fitters.

#include <Eigen/Dense>

#include <functional>
#include <span>

namespace aodkit::fit {

using Residuals = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals)>;

struct LmResult {
  Eigen::VectorXd params;
  // s^2 (J^T J)^-1 at the solution, with s^2 = SSE / (m - n).
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct LmOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-14;
  double step_tolerance = 1e-13;
};

// Levenberg-Marquardt with Marquardt diagonal scaling and central-difference
// Jacobians. Parameters should be O(1); callers rescale physical units.
LmResult levenberg_marquardt(const Residuals& f, Eigen::VectorXd p0, int residual_count,
                             const LmOptions& options = {});

struct Quadratic {
  double a = 0.0;  // y = a + b x + c x^2
  double b = 0.0;
  double c = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
};

Quadratic fit_quadratic(std::span<const double> x, std::span<const double> y);

}  // namespace aodkit::fit
