#include "otoc/model.hpp"

#include <stdexcept>

namespace otoc {

DickeState make_initial_state(const CollectiveOps& ops,
                              const InitialState& init) {
  DickeState state = coherent_state(ops, init.theta, init.phi);
  for (const Rotation& r : init.post_rotations)
    state = rotate(ops, state, r.axis, r.angle);
  return state;
}

int validated_kick_count(double t) {
  const double rounded = std::round(t);
  if (t < -1e-9 || std::abs(t - rounded) > 1e-9)
    throw std::invalid_argument(
        "kicked-top time must be a non-negative integer kick count");
  return static_cast<int>(rounded);
}

DickeState evolve_model(const CollectiveOps& ops, const ModelSpec& model,
                        const DickeState& state, double t,
                        TimeDirection direction) {
  if (t < 0.0) throw std::invalid_argument("evolution time must be >= 0");
  const double sign = direction == TimeDirection::Forward ? 1.0 : -1.0;
  if (model.kind == ModelSpec::Kind::Twisting)
    return evolve_twisting(ops, state, sign * model.chi * t);

  const int kicks = validated_kick_count(t);
  DickeState out = state;
  for (int i = 0; i < kicks; ++i) {
    out = direction == TimeDirection::Forward
              ? kicked_top_step(ops, out, model.kick_strength,
                                model.kick_rotation)
              : kicked_top_step_reversed(ops, out, model.kick_strength,
                                         model.kick_rotation);
  }
  return out;
}

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    default: return "z";
  }
}

Axis axis_from_name(const std::string& name) {
  if (name == "x" || name == "X") return Axis::X;
  if (name == "y" || name == "Y") return Axis::Y;
  if (name == "z" || name == "Z") return Axis::Z;
  throw std::invalid_argument("axis must be one of x, y, z");
}

}  // namespace otoc
