#pragma once

#include <Eigen/Dense>

namespace otoc {

// Point on the unit sphere, the classical phase space of S/S.
struct SpherePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static SpherePoint from_vec(const Eigen::Vector3d& v);
};

struct LyapunovEstimate {
  double lambda = 0.0;  // per kick
  int n_steps = 0;
  SpherePoint start;
  int renorm_interval = 1;
};

// Classical limit of one kicked-top period: rotate about z by p_angle,
// then rotate about x by k * X (torsion proportional to the x component).
// The result is renormalized onto the sphere.
SpherePoint classical_kick_map(const SpherePoint& p, double k, double p_angle);

// Tangent-map step matching classical_kick_map: returns the new point and
// updates the deviation vector in place.
SpherePoint classical_kick_tangent(const SpherePoint& p, double k,
                                   double p_angle, Eigen::Vector3d& deviation);

// Largest Lyapunov exponent by tangent propagation with periodic
// renormalization of the deviation vector.
LyapunovEstimate lyapunov_exponent(const SpherePoint& start, double k,
                                   double p_angle, int n_steps,
                                   int renorm_interval = 1);

// lambda^{-1} ln S, in kicks.
double ehrenfest_time(double lambda, double spin);

}  // namespace otoc
