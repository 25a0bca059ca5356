#pragma once

#include <Eigen/Dense>
#include <complex>

namespace otoc {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class Axis { X, Y, Z };

// Spin magnitude stored as 2S so half-integer values stay exact.
struct SpinQuantum {
  int two_s = 0;

  SpinQuantum() = default;
  explicit SpinQuantum(int two_s_in);
  // Validates that s is a non-negative half-integer.
  static SpinQuantum from_spin(double s);
  static SpinQuantum from_atom_count(int n_atoms) { return SpinQuantum(n_atoms); }

  double s() const { return 0.5 * two_s; }
  int dim() const { return two_s + 1; }
  int n_atoms() const { return two_s; }
};

// Pure state in the symmetric sector, amplitudes over |S, m> with the
// basis ordered m = S, S-1, ..., -S.
struct DickeState {
  SpinQuantum spin;
  VectorXcd amps;

  double norm() const { return amps.norm(); }
  double norm2() const { return amps.squaredNorm(); }
};

inline cplx overlap(const DickeState& a, const DickeState& b) {
  return a.amps.dot(b.amps);
}

// Collective spin matrices for one S plus the eigenbases of Sx and Sy
// used for rotations and the twisting evolution.  Immutable once built;
// safe to share across threads.
class CollectiveOps {
 public:
  explicit CollectiveOps(SpinQuantum spin);

  SpinQuantum spin() const { return spin_; }
  int dim() const { return spin_.dim(); }

  const MatrixXcd& sx() const { return sx_; }
  const MatrixXcd& sy() const { return sy_; }
  MatrixXcd sz() const { return mz_.cast<cplx>().asDiagonal(); }
  // Diagonal of Sz, ordered m = S..-S.
  const VectorXd& mz() const { return mz_; }
  // Eigenvalues shared by Sx and Sy, ascending -S..S (exact half-integers).
  const VectorXd& ladder_eigs() const { return eigs_; }
  const MatrixXcd& eigvecs(Axis axis) const;

 private:
  SpinQuantum spin_;
  MatrixXcd sx_, sy_;
  VectorXd mz_;
  VectorXd eigs_;
  MatrixXcd xvecs_, yvecs_;
};

CollectiveOps make_collective_ops(SpinQuantum spin);

// Spin coherent state along (theta, phi): Rz(phi) Ry(theta) |S, S>.
DickeState coherent_state(const CollectiveOps& ops, double theta, double phi);

// exp(-i angle S_axis) |state>.  Z is a diagonal phase; X and Y go
// through the precomputed eigenbasis.
DickeState rotate(const CollectiveOps& ops, const DickeState& state, Axis axis,
                  double angle);

// exp(-i chi_t Sx^2) |state>.
DickeState evolve_twisting(const CollectiveOps& ops, const DickeState& state,
                           double chi_t);

// One Floquet period U = exp(-i k Sx^2/(2S)) exp(-i p Sz): the kick
// rotation acts first, then the twisting.
DickeState kicked_top_step(const CollectiveOps& ops, const DickeState& state,
                           double kick_strength, double kick_rotation);

// Inverse of one Floquet period: sign-reversed factors in mirrored
// order, exp(+i p Sz) exp(+i k Sx^2/(2S)).
DickeState kicked_top_step_reversed(const CollectiveOps& ops,
                                    const DickeState& state,
                                    double kick_strength,
                                    double kick_rotation);

// <S_axis> of a (possibly unnormalized) state.
double spin_expectation(const CollectiveOps& ops, const DickeState& state,
                        Axis axis);
// <S>/S as a Bloch vector, normalized by the state norm.
Vector3d bloch_vector(const CollectiveOps& ops, const DickeState& state);

}  // namespace otoc
