#include "otoc/semiclassics.hpp"

#include <cmath>
#include <stdexcept>

namespace otoc {

namespace {

Eigen::Vector3d rot_z(const Eigen::Vector3d& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
}

Eigen::Vector3d rot_x(const Eigen::Vector3d& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {v.x(), c * v.y() - s * v.z(), s * v.y() + c * v.z()};
}

}  // namespace

SpherePoint SpherePoint::from_vec(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!(n > 0.0))
    throw std::invalid_argument("sphere point: zero vector");
  return {v.x() / n, v.y() / n, v.z() / n};
}

SpherePoint classical_kick_map(const SpherePoint& p, double k,
                               double p_angle) {
  Eigen::Vector3d v = rot_z(p.vec(), p_angle);
  v = rot_x(v, k * v.x());
  return SpherePoint::from_vec(v);
}

SpherePoint classical_kick_tangent(const SpherePoint& p, double k,
                                   double p_angle,
                                   Eigen::Vector3d& deviation) {
  Eigen::Vector3d v = rot_z(p.vec(), p_angle);
  Eigen::Vector3d dv = rot_z(deviation, p_angle);

  const double beta = k * v.x();
  Eigen::Vector3d v2 = rot_x(v, beta);
  // d/dv [R_x(k X) v] = R_x dv + k dX * (x_hat cross R_x v)
  Eigen::Vector3d dv2 =
      rot_x(dv, beta) + k * dv.x() * Eigen::Vector3d::UnitX().cross(v2);

  deviation = dv2;
  return SpherePoint::from_vec(v2);
}

LyapunovEstimate lyapunov_exponent(const SpherePoint& start, double k,
                                   double p_angle, int n_steps,
                                   int renorm_interval) {
  if (n_steps < 1)
    throw std::invalid_argument("lyapunov: need n_steps >= 1");
  if (renorm_interval < 1)
    throw std::invalid_argument("lyapunov: renorm interval >= 1");

  SpherePoint p = start;
  // Deterministic tangent seed orthogonal to the orbit point.
  Eigen::Vector3d dev = p.vec().cross(Eigen::Vector3d::UnitZ());
  if (dev.norm() < 1e-8) dev = p.vec().cross(Eigen::Vector3d::UnitX());
  dev.normalize();

  double log_sum = 0.0;
  for (int step = 1; step <= n_steps; ++step) {
    p = classical_kick_tangent(p, k, p_angle, dev);
    if (step % renorm_interval == 0 || step == n_steps) {
      const double n = dev.norm();
      log_sum += std::log(n);
      dev /= n;
    }
  }

  LyapunovEstimate est;
  est.lambda = log_sum / n_steps;
  est.n_steps = n_steps;
  est.start = start;
  est.renorm_interval = renorm_interval;
  return est;
}

double ehrenfest_time(double lambda, double spin) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ehrenfest time: lambda must be > 0");
  if (!(spin > 0.0))
    throw std::invalid_argument("ehrenfest time: spin must be > 0");
  return std::log(spin) / lambda;
}

}  // namespace otoc
