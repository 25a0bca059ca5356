#include <cmath>

#include "doctest.h"
#include "otoc/master_equation.hpp"
#include "otoc/open_system.hpp"
#include "otoc/protocols.hpp"

using namespace otoc;

namespace {

ProtocolSpec kicked_spec(int n_atoms, double k) {
  ProtocolSpec spec;
  spec.spin = SpinQuantum(n_atoms);
  spec.model.kind = ModelSpec::Kind::KickedTop;
  spec.model.kick_strength = k;
  spec.model.kick_rotation = M_PI / 2.0;
  const double phi = 1.0 / std::sqrt(static_cast<double>(n_atoms));
  spec.initial = InitialState{
      M_PI / 2.0, 0.0, {{Axis::Z, M_PI / 4.0}, {Axis::Y, M_PI / 4.0}}};
  spec.v = Rotation{Axis::Z, phi};
  spec.w = Rotation{Axis::Z, phi};
  return spec;
}

const std::vector<double> kick_grid{0.0, 1.0, 2.0, 3.0, 4.0};

}  // namespace

TEST_CASE("dicke_to_product expands symmetric states") {
  CollectiveOps ops{SpinQuantum(3)};
  DickeState st = coherent_state(ops, 0.8, 1.3);
  VectorXcd full = dicke_to_product(st);
  CHECK(full.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
  // |S, S-1> spreads uniformly over single-flip strings
  DickeState basis{ops.spin(), VectorXcd::Zero(4)};
  basis.amps[1] = 1.0;
  VectorXcd f = dicke_to_product(basis);
  const double amp = 1.0 / std::sqrt(3.0);
  for (int bits : {1, 2, 4})
    CHECK(std::abs(f[bits] - cplx(amp, 0.0)) < 1e-12);
}

TEST_CASE("oracle reduces to the unitary protocol without dissipation") {
  ProtocolSpec spec = kicked_spec(4, 3.0);
  CollectiveOps ops{spec.spin};
  OracleSeries oracle =
      master_equation_oracle(spec, DissipationParams::none(), kick_grid, 8);
  for (std::size_t i = 0; i < kick_grid.size(); ++i) {
    const cplx f = interferometric_f(ops, spec, kick_grid[i]);
    const cplx g = time_ordered_g(ops, spec, kick_grid[i]);
    CHECK(std::abs(oracle.f[i] - f) < 1e-10);
    CHECK(std::abs(oracle.g[i] - g) < 1e-10);
  }
  CHECK(oracle.max_trace_deviation < 1e-10);
}

TEST_CASE("cavity-only full-space oracle matches the Dicke-sector solve") {
  ProtocolSpec spec = kicked_spec(4, 3.0);
  auto params = DissipationParams::from_rates(1.0, 0.2, 0.0, 5);
  OracleSeries full = master_equation_oracle(spec, params, kick_grid, 16);
  OracleSeries sector = master_equation_oracle_dicke(spec, params, kick_grid);
  for (std::size_t i = 0; i < kick_grid.size(); ++i) {
    CHECK(std::abs(full.f[i] - sector.f[i]) < 1e-8);
    CHECK(std::abs(full.g[i] - sector.g[i]) < 1e-8);
  }
}

TEST_CASE("trace is preserved with all channels active") {
  ProtocolSpec spec = kicked_spec(4, 3.0);
  auto params = DissipationParams::from_cavity(1.0, 100.0, 20.0);
  OracleSeries oracle = master_equation_oracle(spec, params, kick_grid, 32);
  CHECK(oracle.max_trace_deviation < 1e-8);
  for (const cplx& f : oracle.f) CHECK(std::abs(f) < 1.0 + 1e-9);
}

TEST_CASE("step halving changes the oracle by less than 1e-8") {
  ProtocolSpec spec = kicked_spec(4, 3.0);
  auto params = DissipationParams::from_cavity(1.0, 100.0, 20.0);
  OracleSeries coarse = master_equation_oracle(spec, params, kick_grid, 64);
  OracleSeries fine = master_equation_oracle(spec, params, kick_grid, 128);
  double max_dev = 0.0;
  for (std::size_t i = 0; i < kick_grid.size(); ++i)
    max_dev = std::max(max_dev, std::abs(coarse.f[i] - fine.f[i]));
  CHECK(max_dev < 1e-8);
}

TEST_CASE("oracle rejects out-of-range configurations") {
  ProtocolSpec spec = kicked_spec(9, 3.0);
  auto params = DissipationParams::from_cavity(1.0, 100.0, 20.0);
  CHECK_THROWS(master_equation_oracle(spec, params, kick_grid, 32));
  ProtocolSpec ok = kicked_spec(4, 3.0);
  CHECK_THROWS(master_equation_oracle_dicke(ok, params, kick_grid));
}

TEST_CASE("trajectories converge to the master-equation oracle at N=4") {
  ProtocolSpec spec = kicked_spec(4, 3.0);
  auto params = DissipationParams::from_cavity(1.0, 100.0, 20.0, 4);
  OracleSeries oracle = master_equation_oracle(spec, params, kick_grid, 64);
  DissipativeResult traj =
      dissipative_correlators(spec, params, kick_grid, 800, 99, 1);
  for (std::size_t i = 0; i < kick_grid.size(); ++i) {
    const double dr = std::abs(traj.f.mean[i].real() - oracle.f[i].real());
    const double di = std::abs(traj.f.mean[i].imag() - oracle.f[i].imag());
    const double floor = 2e-3;
    CHECK(dr < 5.0 * traj.f.stderr_re[i] + floor);
    CHECK(di < 5.0 * traj.f.stderr_im[i] + floor);
    const double gr = std::abs(traj.g.mean[i].real() - oracle.g[i].real());
    CHECK(gr < 5.0 * traj.g.stderr_re[i] + floor);
  }
}
