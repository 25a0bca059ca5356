#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "otoc/spin_core.hpp"

namespace otoc {

// Rotation descriptor for V, W and initial-state preparation pulses.
struct Rotation {
  Axis axis = Axis::Z;
  double angle = 0.0;

  Rotation inverse() const { return {axis, -angle}; }
};

// Which collective Hamiltonian drives the dynamics.  Twisting evolves
// continuously under chi*Sx^2; the kicked top applies discrete Floquet
// periods exp(-i k Sx^2/(2S)) exp(-i p Sz) and measures time in kicks.
struct ModelSpec {
  enum class Kind { Twisting, KickedTop };

  Kind kind = Kind::Twisting;
  double chi = 1.0;
  double kick_strength = 0.0;
  double kick_rotation = M_PI / 2.0;
};

// Coherent state along (theta, phi) followed by optional preparation
// rotations, applied in list order.
struct InitialState {
  double theta = 0.0;
  double phi = 0.0;
  std::vector<Rotation> post_rotations;
};

struct ProtocolSpec {
  SpinQuantum spin;
  ModelSpec model;
  InitialState initial;
  Rotation v{Axis::Z, 0.0};
  Rotation w{Axis::Z, 0.0};
};

enum class TimeDirection { Forward, Backward };

DickeState make_initial_state(const CollectiveOps& ops,
                              const InitialState& init);

// Evolves by duration t (chi*t units for twisting, integer kick count
// for the kicked top).  Backward evolution reverses the generator signs,
// for the kicked top in mirrored factor order, so that
// evolve(backward, t) inverts evolve(forward, t) exactly.
DickeState evolve_model(const CollectiveOps& ops, const ModelSpec& model,
                        const DickeState& state, double t,
                        TimeDirection direction);

// Kicked-top times must sit on integer kick counts.
int validated_kick_count(double t);

std::string axis_name(Axis axis);
Axis axis_from_name(const std::string& name);

}  // namespace otoc
