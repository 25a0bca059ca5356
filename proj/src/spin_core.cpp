#include "otoc/spin_core.hpp"

#include <cmath>
#include <stdexcept>

namespace otoc {

SpinQuantum::SpinQuantum(int two_s_in) : two_s(two_s_in) {
  if (two_s < 0) throw std::invalid_argument("spin: 2S must be non-negative");
}

SpinQuantum SpinQuantum::from_spin(double s) {
  double two = 2.0 * s;
  double rounded = std::round(two);
  if (!(s >= 0.0) || std::abs(two - rounded) > 1e-9)
    throw std::invalid_argument("spin: S must be a non-negative half-integer");
  return SpinQuantum(static_cast<int>(rounded));
}

CollectiveOps::CollectiveOps(SpinQuantum spin) : spin_(spin) {
  if (spin_.two_s < 1)
    throw std::invalid_argument("collective ops: need 2S >= 1");
  const int d = spin_.dim();
  const double s = spin_.s();
  const double ssp1 = 0.25 * spin_.two_s * (spin_.two_s + 2);  // S(S+1)

  mz_.resize(d);
  for (int k = 0; k < d; ++k) mz_[k] = s - k;

  sx_ = MatrixXcd::Zero(d, d);
  sy_ = MatrixXcd::Zero(d, d);
  for (int k = 1; k < d; ++k) {
    // <S,m+1|S+|S,m> with m = S-k
    const double m = s - k;
    const double c = std::sqrt(ssp1 - m * (m + 1.0));
    sx_(k - 1, k) = 0.5 * c;
    sx_(k, k - 1) = 0.5 * c;
    sy_(k - 1, k) = cplx(0.0, -0.5 * c);
    sy_(k, k - 1) = cplx(0.0, 0.5 * c);
  }

  eigs_.resize(d);
  for (int j = 0; j < d; ++j) eigs_[j] = -s + j;

  Eigen::SelfAdjointEigenSolver<MatrixXcd> esx(sx_);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> esy(sy_);
  if (esx.info() != Eigen::Success || esy.info() != Eigen::Success)
    throw std::runtime_error("collective ops: eigendecomposition failed");
  xvecs_ = esx.eigenvectors();
  yvecs_ = esy.eigenvectors();
  // Ladder spectra are the exact half-integers -S..S; snap to them.
  if ((esx.eigenvalues() - eigs_).cwiseAbs().maxCoeff() > 1e-8 ||
      (esy.eigenvalues() - eigs_).cwiseAbs().maxCoeff() > 1e-8)
    throw std::runtime_error("collective ops: unexpected ladder spectrum");
}

const MatrixXcd& CollectiveOps::eigvecs(Axis axis) const {
  switch (axis) {
    case Axis::X: return xvecs_;
    case Axis::Y: return yvecs_;
    default: throw std::invalid_argument("eigvecs: no table for Z");
  }
}

CollectiveOps make_collective_ops(SpinQuantum spin) {
  return CollectiveOps(spin);
}

DickeState coherent_state(const CollectiveOps& ops, double theta, double phi) {
  DickeState state{ops.spin(), VectorXcd::Zero(ops.dim())};
  state.amps[0] = 1.0;  // |S, S>
  state = rotate(ops, state, Axis::Y, theta);
  state = rotate(ops, state, Axis::Z, phi);
  return state;
}

DickeState rotate(const CollectiveOps& ops, const DickeState& state, Axis axis,
                  double angle) {
  DickeState out = state;
  if (axis == Axis::Z) {
    for (int k = 0; k < ops.dim(); ++k)
      out.amps[k] *= std::exp(cplx(0.0, -angle * ops.mz()[k]));
    return out;
  }
  const MatrixXcd& v = ops.eigvecs(axis);
  VectorXcd c = v.adjoint() * state.amps;
  for (int j = 0; j < ops.dim(); ++j)
    c[j] *= std::exp(cplx(0.0, -angle * ops.ladder_eigs()[j]));
  out.amps.noalias() = v * c;
  return out;
}

DickeState evolve_twisting(const CollectiveOps& ops, const DickeState& state,
                           double chi_t) {
  const MatrixXcd& v = ops.eigvecs(Axis::X);
  VectorXcd c = v.adjoint() * state.amps;
  for (int j = 0; j < ops.dim(); ++j) {
    const double m = ops.ladder_eigs()[j];
    c[j] *= std::exp(cplx(0.0, -chi_t * m * m));
  }
  DickeState out{state.spin, v * c};
  return out;
}

DickeState kicked_top_step(const CollectiveOps& ops, const DickeState& state,
                           double kick_strength, double kick_rotation) {
  DickeState out = rotate(ops, state, Axis::Z, kick_rotation);
  return evolve_twisting(ops, out, kick_strength / ops.spin().two_s);
}

DickeState kicked_top_step_reversed(const CollectiveOps& ops,
                                    const DickeState& state,
                                    double kick_strength,
                                    double kick_rotation) {
  DickeState out =
      evolve_twisting(ops, state, -kick_strength / ops.spin().two_s);
  return rotate(ops, out, Axis::Z, -kick_rotation);
}

double spin_expectation(const CollectiveOps& ops, const DickeState& state,
                        Axis axis) {
  if (axis == Axis::Z) {
    double acc = 0.0;
    for (int k = 0; k < ops.dim(); ++k)
      acc += ops.mz()[k] * std::norm(state.amps[k]);
    return acc;
  }
  const MatrixXcd& m = (axis == Axis::X) ? ops.sx() : ops.sy();
  return state.amps.dot(m * state.amps).real();
}

Vector3d bloch_vector(const CollectiveOps& ops, const DickeState& state) {
  const double n2 = state.norm2();
  const double scale = 1.0 / (ops.spin().s() * n2);
  return Vector3d(spin_expectation(ops, state, Axis::X),
                  spin_expectation(ops, state, Axis::Y),
                  spin_expectation(ops, state, Axis::Z)) *
         scale;
}

}  // namespace otoc
