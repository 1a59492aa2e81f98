#include "aodkit/fitting.hpp"

#include <algorithm>
#include <cmath>

#include "aodkit/errors.hpp"

namespace aodkit::fit {

namespace {

Eigen::MatrixXd jacobian(const Residuals& f, const Eigen::VectorXd& p, int m) {
  const auto n = p.size();
  Eigen::MatrixXd j(m, n);
  Eigen::VectorXd rp(m);
  Eigen::VectorXd rm(m);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = 1e-7 * std::max(1.0, std::abs(p[k]));
    Eigen::VectorXd pp = p;
    Eigen::VectorXd pm = p;
    pp[k] += h;
    pm[k] -= h;
    f(pp, rp);
    f(pm, rm);
    j.col(k) = (rp - rm) / (2.0 * h);
  }
  return j;
}

}  // namespace

LmResult levenberg_marquardt(const Residuals& f, Eigen::VectorXd p, int m, const LmOptions& opt) {
  const auto n = p.size();
  Eigen::VectorXd r(m);
  f(p, r);
  double sse = r.squaredNorm();
  double lambda = 1e-3;
  LmResult out;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd j = jacobian(f, p, m);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance * std::max(1.0, sse)) {
      out.converged = true;
      break;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < n; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-30);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      Eigen::VectorXd trial = p + step;
      Eigen::VectorXd rt(m);
      f(trial, rt);
      const double sse_t = rt.squaredNorm();
      if (std::isfinite(sse_t) && sse_t <= sse) {
        const bool tiny = step.norm() <= opt.step_tolerance * (p.norm() + opt.step_tolerance);
        p = trial;
        r = rt;
        const double prev = sse;
        sse = sse_t;
        lambda = std::max(lambda / 10.0, 1e-15);
        improved = true;
        if (tiny || prev - sse <= 1e-30) out.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No downhill step at any damping: we are at a (numerical) minimum.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }

  out.params = p;
  out.iterations = it;
  out.residual_norm = std::sqrt(sse);
  const Eigen::MatrixXd j = jacobian(f, p, m);
  const double dof = std::max<double>(1.0, static_cast<double>(m - n));
  out.covariance = (sse / dof) * (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse();
  return out;
}

Quadratic fit_quadratic(std::span<const double> x, std::span<const double> y) {
  const auto m = static_cast<Eigen::Index>(x.size());
  if (x.size() != y.size() || m < 3) {
    throw InvalidElementError("fitting", "fit_quadratic", "need at least 3 matching points");
  }
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = x[static_cast<std::size_t>(i)];
    a(i, 2) = x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    b[i] = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
  const double sse = (a * coef - b).squaredNorm();
  const double dof = std::max<double>(1.0, static_cast<double>(m - 3));
  Quadratic q;
  q.a = coef[0];
  q.b = coef[1];
  q.c = coef[2];
  q.covariance = (sse / dof) * (a.transpose() * a).inverse();
  return q;
}

}  // namespace aodkit::fit
