#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "otoc/model.hpp"
#include "otoc/spin_core.hpp"

namespace otoc {

// The two system branches entangled with the control qubit: branch0
// rides with |0>, branch1 with |1>.  The control is never stored as a
// tensor factor; every readout reduces to a branch overlap, with the
// 1/sqrt(2) of the control superposition left implicit.
struct ControlledState {
  DickeState branch0;
  DickeState branch1;

  // <X_C> + i <Y_C> of the joint state = <branch0|branch1>.
  cplx control_xy() const { return overlap(branch0, branch1); }
};

struct CorrelatorSeries {
  std::vector<double> times;
  std::vector<cplx> f;
  std::vector<cplx> g;  // empty unless requested
  std::map<std::string, std::string> metadata;
};

// Branch states after the controlled interferometer sequence:
// branch0 = V W_t |psi>, branch1 = W_t V |psi> with W_t = U(-t) W U(t).
ControlledState controlled_branches(const CollectiveOps& ops,
                                    const ProtocolSpec& spec, double t);

// F(t) = <X_C> + i <Y_C> from the branch construction; equals
// <psi| W_t^dag V^dag W_t V |psi> by the fixed overlap convention.
cplx interferometric_f(const CollectiveOps& ops, const ProtocolSpec& spec,
                       double t);

// Direct Heisenberg-picture evaluation of the same correlator by an
// eight-gate state-vector sequence; the internal oracle for the
// interferometric path.
cplx direct_oto_f(const CollectiveOps& ops, const ProtocolSpec& spec,
                  double t);

// |<psi| W_t^dag V^dag W_t V |psi>|^2, the projector measurement of the
// control-free protocol.
double distinguishability(const CollectiveOps& ops, const ProtocolSpec& spec,
                          double t);

// G(t) = <psi| U(-t) V^dag U(t) V |psi>.
cplx time_ordered_g(const CollectiveOps& ops, const ProtocolSpec& spec,
                    double t);

// Forward-only controlled sequence for a time-ordered string:
// returns <(V_n(t_n)...V_1(t_1))^dag (W_n(t_n)...W_1(t_1))>.
// Times must be non-decreasing; both operator lists share the grid.
cplx forward_only_time_ordered(const CollectiveOps& ops,
                               const ProtocolSpec& spec,
                               std::span<const Rotation> v_ops,
                               std::span<const Rotation> w_ops,
                               std::span<const double> op_times);

struct HermitianObs {
  Axis axis = Axis::Z;
  double scale = 1.0;
};

struct HermitianOtoResult {
  // 2 Re<O^V O^W_t O^V O^W_t> / (<O^W_t O^V O^V O^W_t> + <O^V O^W_t O^W_t O^V>)
  double ratio = 0.0;
  // eps^3 * (denominator)/2: probability that all three flag qubits fire.
  double postselect_probability = 0.0;
};

HermitianOtoResult hermitian_oto(const CollectiveOps& ops,
                                 const ProtocolSpec& spec, HermitianObs ov,
                                 HermitianObs ow, double t, double eps);

struct SeriesOptions {
  bool with_g = false;
  bool with_direct_check = true;
  int threads = 1;
};

// Evaluates F (and optionally G) over a time grid; each grid point is an
// independent work unit and assembly is index-ordered.  When
// with_direct_check is set, the direct-evaluation oracle runs alongside
// and the maximum deviation lands in metadata["max_f_oracle_dev"].
CorrelatorSeries correlator_series(const CollectiveOps& ops,
                                   const ProtocolSpec& spec,
                                   const std::vector<double>& times,
                                   const SeriesOptions& options = {});

// Unitary-run sanity bound |F|,|G| <= 1 + 1e-9; throws on violation.
void check_unitary_bounds(const CorrelatorSeries& series);

}  // namespace otoc
