#pragma once

#include <optional>
#include <span>
#include <vector>

#include "otoc/spin_core.hpp"

namespace otoc {

// W(theta_i, phi_j) on a Gauss-Legendre (theta) x uniform (phi) grid,
// with quadrature weights for sphere integrals.  Multipole convention:
// W = sum_kq rho_kq Y_kq with orthonormal tensor operators, so the
// sphere integral of W equals sqrt(4 pi / (2S+1)) * <psi|psi>.
struct WignerGrid {
  int n_theta = 0;
  int n_phi = 0;
  std::vector<double> thetas;         // ascending in theta
  std::vector<double> theta_weights;  // Gauss-Legendre weights in cos(theta)
  std::vector<double> phis;           // uniform, spacing 2 pi / n_phi
  Eigen::MatrixXd values;             // n_theta x n_phi

  double sphere_integral() const;
};

// Spherical-multipole Wigner quasiprobability of a Dicke-sector state.
// Pass 0 for either grid size to get the default resolving the full
// multipole content (n_theta = 2S+2, n_phi = 4S+4).
WignerGrid wigner(const DickeState& state, int n_theta = 0, int n_phi = 0);

// <j1 m1; j2 m2 | j m>, Condon-Shortley convention.
double clebsch_gordan(double j1, double m1, double j2, double m2, double j,
                      double m);

struct DecayTime {
  double threshold = 0.5;
  // First time |series| crosses below threshold, linearly interpolated;
  // empty when no crossing occurs within the grid.
  std::optional<double> t_cross;
};

DecayTime decay_time(std::span<const double> times,
                     std::span<const double> magnitudes,
                     double threshold = 0.5);

}  // namespace otoc
