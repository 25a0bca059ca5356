#include <cmath>

#include "doctest.h"
#include "otoc/model.hpp"
#include "otoc/rng.hpp"
#include "otoc/semiclassics.hpp"
#include "otoc/spin_core.hpp"

using namespace otoc;

TEST_CASE("k = 0 map is a pure z rotation") {
  SpherePoint p{1.0, 0.0, 0.0};
  SpherePoint out = classical_kick_map(p, 0.0, M_PI / 2.0);
  // exp(-i p Sz) advances the azimuth by +p
  CHECK(out.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.z == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("torsion vanishes on the rotated x axis point") {
  // After the p = pi/2 rotation the point sits on the y axis where the
  // torsion angle k X is zero, so any k gives the same image.
  SpherePoint p{1.0, 0.0, 0.0};
  SpherePoint a = classical_kick_map(p, 0.0, M_PI / 2.0);
  SpherePoint b = classical_kick_map(p, 7.3, M_PI / 2.0);
  CHECK(a.x == doctest::Approx(b.x).epsilon(1e-12));
  CHECK(a.y == doctest::Approx(b.y).epsilon(1e-12));
  CHECK(a.z == doctest::Approx(b.z).epsilon(1e-12));
}

TEST_CASE("map keeps points on the sphere") {
  SpherePoint p{0.5, std::sqrt(0.5), -0.5};
  for (int i = 0; i < 200; ++i) {
    p = classical_kick_map(p, 3.0, M_PI / 2.0);
    const double n = p.vec().norm();
    CHECK(std::abs(n - 1.0) < 1e-12);
  }
}

TEST_CASE("quantum-classical correspondence at S = 500") {
  const int two_s = 1000;
  CollectiveOps ops{SpinQuantum(two_s)};
  InitialState init{M_PI / 2.0, 0.0, {{Axis::Z, M_PI / 4.0},
                                      {Axis::Y, M_PI / 4.0}}};
  DickeState psi = make_initial_state(ops, init);
  SpherePoint p = SpherePoint::from_vec(bloch_vector(ops, psi));

  ModelSpec model;
  model.kind = ModelSpec::Kind::KickedTop;
  model.kick_strength = 3.0;
  model.kick_rotation = M_PI / 2.0;

  for (int kick = 1; kick <= 5; ++kick) {
    psi = kicked_top_step(ops, psi, model.kick_strength, model.kick_rotation);
    p = classical_kick_map(p, model.kick_strength, model.kick_rotation);
    const Eigen::Vector3d q = bloch_vector(ops, psi);
    CHECK((q - p.vec()).cwiseAbs().maxCoeff() < 0.05);
  }
}

TEST_CASE("lyapunov exponent basics") {
  SpherePoint start{0.43, 0.55, 0.71589};
  start = SpherePoint::from_vec(start.vec());

  SUBCASE("pure rotation has zero exponent") {
    auto est = lyapunov_exponent(start, 0.0, M_PI / 2.0, 2000);
    CHECK(std::abs(est.lambda) < 1e-6);
  }

  SUBCASE("small k is regular") {
    auto est = lyapunov_exponent(start, 0.5, M_PI / 2.0, 4000);
    CHECK(est.lambda < 0.01);
  }

  SUBCASE("k = 3 is chaotic at the kicked-top start point") {
    InitialState init{M_PI / 2.0, 0.0, {{Axis::Z, M_PI / 4.0},
                                        {Axis::Y, M_PI / 4.0}}};
    SpherePoint fig_start{0.5, std::sqrt(0.5), -0.5};
    auto est = lyapunov_exponent(fig_start, 3.0, M_PI / 2.0, 4000);
    CHECK(est.lambda > 0.1);
  }

  SUBCASE("estimate is insensitive to the renormalization interval") {
    auto a = lyapunov_exponent(start, 3.0, M_PI / 2.0, 5000, 1);
    auto b = lyapunov_exponent(start, 3.0, M_PI / 2.0, 5000, 10);
    CHECK(std::abs(a.lambda - b.lambda) < 1e-3);
  }

  SUBCASE("invalid arguments") {
    CHECK_THROWS(lyapunov_exponent(start, 3.0, M_PI / 2.0, 0));
  }
}

TEST_CASE("lambda grows with k on average over random starts") {
  RngStream rng = RngStream::keyed(7, 0);
  double mean_small = 0.0, mean_large = 0.0;
  const int n_starts = 50;
  for (int i = 0; i < n_starts; ++i) {
    const double z = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * M_PI * rng.uniform();
    const double r = std::sqrt(1.0 - z * z);
    SpherePoint p{r * std::cos(phi), r * std::sin(phi), z};
    mean_small += lyapunov_exponent(p, 0.5, M_PI / 2.0, 1500).lambda;
    mean_large += lyapunov_exponent(p, 3.0, M_PI / 2.0, 1500).lambda;
  }
  CHECK(mean_large / n_starts > mean_small / n_starts);
}

TEST_CASE("ehrenfest time") {
  CHECK(ehrenfest_time(1.0, std::exp(1.0)) == doctest::Approx(1.0));
  CHECK(ehrenfest_time(0.5, 100.0) == doctest::Approx(9.21).epsilon(1e-3));
  CHECK_THROWS(ehrenfest_time(0.0, 10.0));
  CHECK_THROWS(ehrenfest_time(-0.2, 10.0));
}
