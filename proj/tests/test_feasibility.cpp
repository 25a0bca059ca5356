#include <cmath>

#include "doctest.h"
#include "otoc/feasibility.hpp"
#include "otoc/open_system.hpp"

using namespace otoc;

TEST_CASE("phi_max") {
  CHECK(phi_max(8.0, 1) == doctest::Approx(1.0));
  CHECK(phi_max(100.0, 100) == doctest::Approx(0.35355339).epsilon(1e-6));
  // order sqrt(eta/N): the ratio to sqrt(eta/N) is the constant 1/sqrt(8)
  const double ratio = phi_max(100.0, 100) / std::sqrt(100.0 / 100.0);
  CHECK(ratio == doctest::Approx(1.0 / std::sqrt(8.0)));

  SUBCASE("scaling in eta and N") {
    const double base = phi_max(50.0, 200);
    CHECK(phi_max(200.0, 200) == doctest::Approx(2.0 * base));
    CHECK(phi_max(50.0, 800) == doctest::Approx(0.5 * base));
  }
}

TEST_CASE("gate contrast") {
  CHECK(gate_contrast(0.0, 100.0, 100) == doctest::Approx(1.0));
  const double pm = phi_max(100.0, 100);
  CHECK(gate_contrast(pm, 100.0, 100) == doctest::Approx(std::exp(-1.0)));
  CHECK(gate_contrast(0.1, 100.0, 100) ==
        doctest::Approx(0.7536).epsilon(1e-4));
  CHECK_THROWS(gate_contrast(-0.1, 100.0, 100));
}

TEST_CASE("z_opt and its validity flag") {
  SUBCASE("large splitting is valid") {
    // 2 delta = 1e3 Gamma, N eta = 1e5
    auto r = z_opt(1000.0, 100, 1.0, 500.0);
    CHECK(r.z_opt == doctest::Approx(std::sqrt(2e5) / 1000.0).epsilon(1e-9));
    CHECK(r.valid);
  }
  SUBCASE("small splitting is flagged") {
    // 2 delta = 10 Gamma, N = 100, eta = 100
    auto r = z_opt(100.0, 100, 1.0, 5.0);
    CHECK(r.z_opt == doctest::Approx(std::sqrt(2e4) / 10.0).epsilon(1e-9));
    CHECK_FALSE(r.valid);
  }
  SUBCASE("vanishing N eta limit") {
    auto r = z_opt(1e-12, 1, 1.0, 500.0);
    CHECK(r.z_opt < 1e-5);
    CHECK(r.valid);
  }
  SUBCASE("boundary 2 delta = sqrt(2 N eta) Gamma") {
    const double crit = std::sqrt(2.0 * 100 * 100.0);
    auto lo = z_opt(100.0, 100, 1.0, 0.5 * crit * 0.999);
    auto hi = z_opt(100.0, 100, 1.0, 0.5 * crit * 1.001);
    CHECK_FALSE(lo.valid);
    CHECK(hi.valid);
  }
}

TEST_CASE("d_opt equalizes the rates") {
  CHECK(d_opt(2.0) == doctest::Approx(4.0));
  CHECK(d_opt(100.0) == doctest::Approx(28.2842712).epsilon(1e-6));
  CHECK_THROWS(d_opt(1.0));
  CHECK_THROWS(d_opt(0.5));

  for (double eta = 1.5; eta < 1.0e4; eta *= 2.7) {
    auto p = DissipationParams::from_cavity(1.0, eta, d_opt(eta));
    CHECK(p.gamma == doctest::Approx(p.mu).epsilon(1e-12));
  }
  // the headline setting d = 20 at eta = 100 sits off-optimum: gamma/mu = 2
  auto p = DissipationParams::from_cavity(1.0, 100.0, 20.0);
  CHECK(p.gamma / p.mu == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("eta_min") {
  CHECK(eta_min(3.0, 1000) == doctest::Approx(107.36).epsilon(1e-3));
  CHECK(eta_min(3.0, 100) == doctest::Approx(47.72).epsilon(1e-3));
  const double k = 2.0 / std::log(500.0);
  CHECK(eta_min(k, 500) == doctest::Approx(1.0));
  CHECK_THROWS(eta_min(0.0, 100));
  CHECK_THROWS(eta_min(3.0, 1));
}

TEST_CASE("cavity params consistency check") {
  CavityParams p;
  p.eta = 100.0;
  p.n_atoms = 100;
  p.gamma_atomic = 1.0;
  p.g = 5.0;
  p.kappa = 1.0;
  CHECK_NOTHROW(p.validate());
  p.kappa = 2.0;  // eta no longer equals 4 g^2/(kappa Gamma)
  CHECK_THROWS(p.validate());
}
