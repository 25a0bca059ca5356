#pragma once

#include <optional>

namespace otoc {

// Cavity figures of merit used by the closed-form calculators.  Rates
// (gamma_atomic, delta) share units; eta and the outputs marked
// dimensionless are pure numbers.
struct CavityParams {
  double eta = 0.0;        // single-atom cooperativity, 4 g^2/(kappa Gamma)
  int n_atoms = 1;
  double kick_strength = 0.0;
  double gamma_atomic = 0.0;  // atomic linewidth Gamma
  double delta = 0.0;         // half the ground-state splitting
  std::optional<double> g;
  std::optional<double> kappa;

  void validate() const;  // throws on inconsistent or out-of-range values
};

// Largest controlled-phase angle with order-unity success probability:
// sqrt(eta / (8 N)).
double phi_max(double eta, int n_atoms);

// Success probability of a controlled-phase rotation by phi:
// exp(-phi / phi_max).
double gate_contrast(double phi, double eta, int n_atoms);

struct ZOptResult {
  double z_opt = 0.0;
  bool valid = false;  // requires z_opt <= 1, i.e. 2 delta >= sqrt(2 N eta) Gamma
};

// Detuning parameter minimizing photons scattered during the controlled
// phase gate: sqrt(2 N eta) * Gamma / (2 delta).
ZOptResult z_opt(double eta, int n_atoms, double gamma_atomic, double delta);

// Detuning d equalizing the cavity and spontaneous rates: sqrt(8 eta).
// Only meaningful for eta > 1.
double d_opt(double eta);

// Minimum cooperativity for observing the onset of chaos:
// ((k/2) ln N)^2.
double eta_min(double kick_strength, int n_atoms);

}  // namespace otoc
