#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "otoc/protocols.hpp"

using namespace otoc;

namespace {

ProtocolSpec twisting_spec(int two_s, double v_angle, double w_angle) {
  ProtocolSpec spec;
  spec.spin = SpinQuantum(two_s);
  spec.model.kind = ModelSpec::Kind::Twisting;
  spec.initial = InitialState{M_PI / 2.0, M_PI / 2.0, {}};  // |y>
  spec.v = Rotation{Axis::Z, v_angle};
  spec.w = Rotation{Axis::Z, w_angle};
  return spec;
}

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

}  // namespace

TEST_CASE("F(0) = 1 for commuting V, W") {
  ProtocolSpec spec = twisting_spec(50, M_PI / 4.0, M_PI / 4.0);
  CollectiveOps ops{spec.spin};
  CHECK(std::abs(interferometric_f(ops, spec, 0.0) - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("identity V and W give F = 1 at any time") {
  ProtocolSpec spec = twisting_spec(20, 0.0, 0.0);
  CollectiveOps ops{spec.spin};
  for (double t : {0.3, 1.1, 2.5})
    CHECK(std::abs(interferometric_f(ops, spec, t) - cplx(1.0, 0.0)) < 1e-10);
}

TEST_CASE("free model keeps F = 1 when V, W are z rotations") {
  ProtocolSpec spec = twisting_spec(16, 0.6, 0.2);
  spec.model.chi = 0.0;
  CollectiveOps ops{spec.spin};
  for (double t : {0.5, 2.0})
    CHECK(std::abs(direct_oto_f(ops, spec, t) - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("interferometric and direct paths agree") {
  SUBCASE("twisting at S = 25") {
    ProtocolSpec spec = twisting_spec(50, M_PI / 4.0, M_PI / 4.0);
    CollectiveOps ops{spec.spin};
    for (double t : {0.1, 0.4, 0.9, 1.7}) {
      const cplx a = interferometric_f(ops, spec, t);
      const cplx b = direct_oto_f(ops, spec, t);
      CHECK(std::abs(a - b) < 1e-10);
      CHECK(std::abs(a) < 1.0 + 1e-9);
    }
  }
  SUBCASE("kicked top at N = 60") {
    ProtocolSpec spec = kicked_spec(60, 3.0);
    CollectiveOps ops{spec.spin};
    for (double t : {1.0, 4.0, 9.0}) {
      const cplx a = interferometric_f(ops, spec, t);
      const cplx b = direct_oto_f(ops, spec, t);
      CHECK(std::abs(a - b) < 1e-10);
    }
  }
}

TEST_CASE("commutator identity 2(1 - Re F) = <|[W_t, V]|^2>") {
  ProtocolSpec spec = twisting_spec(30, M_PI / 4.0, M_PI / 4.0);
  CollectiveOps ops{spec.spin};
  for (double t : {0.15, 0.6, 1.3}) {
    ControlledState branches = controlled_branches(ops, spec, t);
    const double comm_sq =
        (branches.branch1.amps - branches.branch0.amps).squaredNorm();
    const double from_f = 2.0 * (1.0 - direct_oto_f(ops, spec, t).real());
    CHECK(std::abs(comm_sq - from_f) < 1e-9);
  }
}

TEST_CASE("distinguishability equals |F|^2 for pure states") {
  ProtocolSpec spec = twisting_spec(24, M_PI / 4.0, M_PI / 3.0);
  CollectiveOps ops{spec.spin};
  CHECK(distinguishability(ops, spec, 0.0) == doctest::Approx(1.0));
  for (double t : {0.2, 0.8, 1.9}) {
    const double d = distinguishability(ops, spec, t);
    const double f2 = std::norm(interferometric_f(ops, spec, t));
    CHECK(std::abs(d - f2) < 1e-9);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0 + 1e-9);
  }
  SUBCASE("V = identity pins the result at 1") {
    spec.v.angle = 0.0;
    for (double t : {0.4, 1.2})
      CHECK(distinguishability(ops, spec, t) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("time-ordered correlator basics") {
  ProtocolSpec spec = kicked_spec(40, 3.0);
  CollectiveOps ops{spec.spin};
  CHECK(std::abs(time_ordered_g(ops, spec, 0.0) - cplx(1.0, 0.0)) < 1e-12);
  spec.v.angle = 0.0;
  CHECK(std::abs(time_ordered_g(ops, spec, 5.0) - cplx(1.0, 0.0)) < 1e-10);
  CHECK_THROWS(time_ordered_g(ops, spec, -1.0));
}

TEST_CASE("G decays faster than F for the kicked top") {
  ProtocolSpec spec = kicked_spec(100, 3.0);
  CollectiveOps ops{spec.spin};
  double g5 = std::abs(time_ordered_g(ops, spec, 5.0));
  double f5 = std::abs(interferometric_f(ops, spec, 5.0));
  CHECK(g5 < f5);
}

TEST_CASE("forward-only protocol") {
  ProtocolSpec spec = twisting_spec(4, 0.0, 0.0);  // S = 2
  CollectiveOps ops{spec.spin};

  SUBCASE("single pair with W = V returns 1") {
    const Rotation r{Axis::Z, 0.9};
    const double t = 0.6;
    const cplx g = forward_only_time_ordered(ops, spec, {{r}}, {{r}}, {{t}});
    CHECK(std::abs(g - cplx(1.0, 0.0)) < 1e-12);
  }

  SUBCASE("single generic pair matches the Heisenberg oracle") {
    const Rotation v{Axis::Z, 0.8};
    const Rotation w{Axis::Z, 0.3};
    const double t = 0.7;
    const cplx g = forward_only_time_ordered(ops, spec, {{v}}, {{w}}, {{t}});
    // <(V(t))^dag W(t)> evaluated directly
    DickeState psi = make_initial_state(ops, spec.initial);
    DickeState lhs =
        evolve_model(ops, spec.model, psi, t, TimeDirection::Forward);
    lhs = rotate(ops, lhs, v.axis, v.angle);
    DickeState rhs =
        evolve_model(ops, spec.model, psi, t, TimeDirection::Forward);
    rhs = rotate(ops, rhs, w.axis, w.angle);
    CHECK(std::abs(g - overlap(lhs, rhs)) < 1e-10);
  }

  SUBCASE("identity padding reproduces time_ordered_g") {
    ProtocolSpec gt = twisting_spec(8, 0.5, 0.0);
    CollectiveOps gops{gt.spin};
    const double t = 0.9;
    const std::vector<Rotation> v_ops{{Axis::Z, 0.0}, {Axis::Z, 0.5}};
    const std::vector<Rotation> w_ops{{Axis::Z, 0.5}, {Axis::Z, 0.0}};
    const std::vector<double> ts{0.0, t};
    const cplx padded = forward_only_time_ordered(gops, gt, v_ops, w_ops, ts);
    CHECK(std::abs(padded - time_ordered_g(gops, gt, t)) < 1e-12);
  }

  SUBCASE("decreasing time sequences are rejected") {
    const std::vector<Rotation> rr{{Axis::Z, 0.1}, {Axis::Z, 0.1}};
    CHECK_THROWS(forward_only_time_ordered(ops, spec, rr, rr, {{0.5, 0.2}}));
  }
}

TEST_CASE("hermitian OTO ratio") {
  SUBCASE("commuting case at t = 0 gives exactly 1") {
    ProtocolSpec spec = twisting_spec(10, 0.0, 0.0);
    CollectiveOps ops{spec.spin};
    auto res = hermitian_oto(ops, spec, {Axis::Z, 1.0}, {Axis::Z, 1.0}, 0.0,
                             0.01);
    CHECK(res.ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.postselect_probability > 0.0);
  }

  SUBCASE("S = 1 brute-force oracle at t = 0") {
    ProtocolSpec spec;
    spec.spin = SpinQuantum(2);
    spec.model.kind = ModelSpec::Kind::Twisting;
    spec.initial = InitialState{0.0, 0.0, {}};  // |z>
    CollectiveOps ops{spec.spin};
    // u = Sx Sz |1,1> , v = Sz Sx |1,1> by 3x3 arithmetic
    VectorXcd e0 = VectorXcd::Zero(3);
    e0[0] = 1.0;
    VectorXcd u = ops.sx() * (ops.sz() * e0);
    VectorXcd v = ops.sz() * (ops.sx() * e0);
    const double expect_num = 2.0 * u.dot(v).real();
    const double expect_den = u.squaredNorm() + v.squaredNorm();
    auto res = hermitian_oto(ops, spec, {Axis::Z, 1.0}, {Axis::X, 1.0}, 0.0,
                             0.05);
    CHECK(res.ratio == doctest::Approx(expect_num / expect_den).epsilon(1e-12));
    const double eps = 0.05;
    CHECK(res.postselect_probability ==
          doctest::Approx(eps * eps * eps * expect_den / 2.0));
  }

  SUBCASE("kicked-top ratio decays like the unitary OTO timescale") {
    ProtocolSpec spec = kicked_spec(50, 3.0);
    CollectiveOps ops{spec.spin};
    const HermitianObs obs{Axis::Z, 1.0 / 25.0};  // Sz / S
    auto early = hermitian_oto(ops, spec, obs, obs, 1.0, 0.01);
    auto late = hermitian_oto(ops, spec, obs, obs, 12.0, 0.01);
    CHECK(early.ratio > 0.9);
    CHECK(late.ratio < early.ratio);
  }

  SUBCASE("zero denominator is rejected") {
    ProtocolSpec spec;
    spec.spin = SpinQuantum(2);
    spec.model.kind = ModelSpec::Kind::Twisting;
    spec.initial = InitialState{M_PI / 2.0, 0.0, {}};
    CollectiveOps ops{spec.spin};
    CHECK_THROWS(hermitian_oto(ops, spec, {Axis::Z, 0.0}, {Axis::Z, 0.0}, 0.0,
                               0.01));
  }
}

TEST_CASE("negative times and bad descriptors are rejected") {
  ProtocolSpec spec = twisting_spec(10, 0.3, 0.3);
  CollectiveOps ops{spec.spin};
  CHECK_THROWS(interferometric_f(ops, spec, -0.5));
  spec.v.angle = std::nan("");
  CHECK_THROWS(interferometric_f(ops, spec, 0.5));
}

TEST_CASE("kicked-top times must be integers") {
  ProtocolSpec spec = kicked_spec(20, 3.0);
  CollectiveOps ops{spec.spin};
  CHECK_THROWS(interferometric_f(ops, spec, 1.5));
}

TEST_CASE("series evaluation is thread-count independent") {
  ProtocolSpec spec = twisting_spec(30, M_PI / 4.0, M_PI / 4.0);
  CollectiveOps ops{spec.spin};
  std::vector<double> times;
  for (int i = 0; i <= 40; ++i) times.push_back(0.05 * i);
  SeriesOptions one;
  one.threads = 1;
  one.with_g = true;
  SeriesOptions four = one;
  four.threads = 4;
  CorrelatorSeries a = correlator_series(ops, spec, times, one);
  CorrelatorSeries b = correlator_series(ops, spec, times, four);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(a.f[i] == b.f[i]);
    CHECK(a.g[i] == b.g[i]);
  }
  CHECK(std::stod(a.metadata.at("max_f_oracle_dev")) < 1e-10);
}
