#include "otoc/feasibility.hpp"

#include <cmath>
#include <stdexcept>

namespace otoc {

void CavityParams::validate() const {
  if (!(eta > 0.0))
    throw std::invalid_argument("cavity params: eta must be > 0");
  if (n_atoms < 1)
    throw std::invalid_argument("cavity params: N must be >= 1");
  if (g && kappa) {
    if (!(*kappa > 0.0) || !(gamma_atomic > 0.0))
      throw std::invalid_argument("cavity params: kappa, Gamma must be > 0");
    const double eta_from_rates = 4.0 * (*g) * (*g) / (*kappa * gamma_atomic);
    if (std::abs(eta_from_rates - eta) > 1e-9 * std::max(1.0, eta))
      throw std::invalid_argument(
          "cavity params: eta inconsistent with 4 g^2/(kappa Gamma)");
  }
}

double phi_max(double eta, int n_atoms) {
  if (!(eta > 0.0)) throw std::invalid_argument("phi_max: eta must be > 0");
  if (n_atoms < 1) throw std::invalid_argument("phi_max: N must be >= 1");
  return std::sqrt(eta / (8.0 * n_atoms));
}

double gate_contrast(double phi, double eta, int n_atoms) {
  if (!(phi >= 0.0))
    throw std::invalid_argument("gate_contrast: phi must be >= 0");
  return std::exp(-phi / phi_max(eta, n_atoms));
}

ZOptResult z_opt(double eta, int n_atoms, double gamma_atomic, double delta) {
  if (!(eta > 0.0) || n_atoms < 1 || !(gamma_atomic > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("z_opt: inputs must be positive");
  ZOptResult result;
  result.z_opt =
      std::sqrt(2.0 * n_atoms * eta) * gamma_atomic / (2.0 * delta);
  result.valid = result.z_opt <= 1.0;
  return result;
}

double d_opt(double eta) {
  if (!(eta > 1.0))
    throw std::invalid_argument("d_opt: formula regime requires eta > 1");
  return std::sqrt(8.0 * eta);
}

double eta_min(double kick_strength, int n_atoms) {
  if (!(kick_strength > 0.0))
    throw std::invalid_argument("eta_min: k must be > 0");
  if (n_atoms < 2) throw std::invalid_argument("eta_min: N must be >= 2");
  const double v = 0.5 * kick_strength * std::log(static_cast<double>(n_atoms));
  return v * v;
}

}  // namespace otoc
