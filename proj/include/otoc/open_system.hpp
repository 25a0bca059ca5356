#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "otoc/model.hpp"
#include "otoc/protocols.hpp"
#include "otoc/rng.hpp"
#include "otoc/spin_core.hpp"

namespace otoc {

// Cavity-implementation decay rates.  gamma = 2 chi / d is the cavity
// photon loss rate per atom (collective jump operator sqrt(gamma) Sx);
// mu = chi d / (4 eta) is half the spontaneous scattering rate per atom
// (four single-atom operators at rate mu each).
struct DissipationParams {
  double chi = 1.0;
  double eta = 0.0;
  double d = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  int photon_budget = 5;

  static DissipationParams from_cavity(double chi, double eta, double d,
                                       int photon_budget = 5);
  static DissipationParams from_rates(double chi, double gamma, double mu,
                                      int photon_budget = 5);
  static DissipationParams none();

  bool zero() const { return gamma == 0.0 && mu == 0.0; }
};

enum class JumpChannelKind : int {
  Cavity = 0,
  SpFlipUp,    // sqrt(mu) |up><down|_i
  SpFlipDown,  // sqrt(mu) |down><up|_i
  SpProjUp,    // sqrt(mu) |up><up|_i
  SpProjDown,  // sqrt(mu) |down><down|_i
};

const char* jump_channel_name(JumpChannelKind kind);

// Symbolic jump operator: the collective cavity channel has atom = -1.
struct JumpChannel {
  JumpChannelKind kind = JumpChannelKind::Cavity;
  int atom = -1;
  double rate = 0.0;  // gamma for cavity, mu for single-atom channels
};

std::vector<JumpChannel> jump_operators(int n_atoms,
                                        const DissipationParams& params);

// Product of a Dicke sector over the untouched atoms with explicit
// spin-1/2 factors for atoms that have spontaneously scattered.
// Amplitude index = k_collective * 2^n_tracked + tracked_bits, where the
// collective index runs m = S_c..-S_c (S_c = (N - n_tracked)/2) and
// tracked bit j (0 = up) belongs to the j-th promoted atom.
struct HybridState {
  int n_atoms = 0;
  int n_tracked = 0;
  VectorXcd amps;

  static HybridState from_dicke(const DickeState& state);

  int collective_dim() const { return n_atoms - n_tracked + 1; }
  int tracked_dim() const { return 1 << n_tracked; }
  int dim() const { return collective_dim() * tracked_dim(); }
  double collective_spin() const { return 0.5 * (n_atoms - n_tracked); }
  double norm2() const { return amps.squaredNorm(); }
};

struct JumpEvent {
  double time = 0.0;
  JumpChannelKind kind = JumpChannelKind::Cavity;
  int atom = -1;
};

// Per-trajectory stochastic context: the pending norm^2 threshold of the
// next jump and the spontaneous-photon budget state.
struct TrajectoryCtx {
  double threshold = 1.0;
  int spont_count = 0;
  bool overflowed = false;
  double time = 0.0;
};

// Shared immutable tables for one (N, model, params) configuration.
// All methods are const and safe to call from many workers.
class TrajectoryEngine {
 public:
  TrajectoryEngine(int n_atoms, ModelSpec model, DissipationParams params);

  int n_atoms() const { return n_atoms_; }
  const ModelSpec& model() const { return model_; }
  const DissipationParams& params() const { return params_; }
  const CollectiveOps& dicke_ops() const { return *dicke_ops_; }

  HybridState initial_hybrid(const InitialState& init) const;

  // Instantaneous gates (no dissipative exposure).
  void apply_rotation(HybridState& state, const Rotation& r) const;

  // Non-Hermitian twisting evolution for a physical duration with
  // Hamiltonian sign +1/-1, interrupted by sampled jumps.  All states in
  // the span advance under the same noise realization; norms are tracked
  // jointly with weight 1/n_states.
  std::vector<JumpEvent> twist_segment(std::span<HybridState> states,
                                       double duration, int h_sign,
                                       TrajectoryCtx& ctx,
                                       RngStream& rng) const;

  // One model step: a full kick period for the kicked top (rotation then
  // twisting forward; mirrored and sign-reversed backward), or a plain
  // twisting segment of duration dt for the twisting model.  Dissipation
  // acts only during the twisting part.
  std::vector<JumpEvent> step(std::span<HybridState> states,
                              TimeDirection direction, double dt,
                              TrajectoryCtx& ctx, RngStream& rng) const;

  // Jump mechanics without sampling (also used by tests): applies the
  // channel operator.  A spontaneous channel on an untouched atom
  // (atom >= n_tracked) promotes the next untouched atom first.
  void apply_jump(HybridState& state, JumpChannelKind kind, int atom) const;

  // Clebsch-Gordan embedding Dicke(N-n) -> Dicke(N-n-1) x C^2 singling
  // out one more atom.
  HybridState promote_next_atom(const HybridState& state) const;

  double sx_total_expectation(const HybridState& state) const;
  double sz_collective_expectation(const HybridState& state) const;

 private:
  struct CollectiveBasis;
  const CollectiveBasis& basis(int n_tracked) const;

  void to_ladder_basis(HybridState& state, Axis axis) const;
  void from_ladder_basis(HybridState& state, Axis axis) const;
  void fill_ladder_eigs(const HybridState& state,
                        std::vector<double>& eigs) const;

  int n_atoms_ = 0;
  ModelSpec model_;
  DissipationParams params_;
  std::shared_ptr<const CollectiveOps> dicke_ops_;
  std::vector<std::shared_ptr<const CollectiveBasis>> bases_;
};

// One trajectory step for a single stochastic wavefunction (the spec-level
// stepping interface; dt is ignored for the kicked top).
std::vector<JumpEvent> trajectory_step(const TrajectoryEngine& engine,
                                       HybridState& state,
                                       TimeDirection direction, double dt,
                                       TrajectoryCtx& ctx, RngStream& rng);

struct TrajectoryPointRecord {
  double t = 0.0;
  cplx f{0.0, 0.0};
  cplx g{0.0, 0.0};
  bool overflowed = false;
  std::vector<JumpEvent> backward_jumps;
};

struct TrajectoryRecord {
  std::uint64_t trajectory_index = 0;
  std::uint64_t master_seed = 0;
  bool overflowed = false;  // any point experiment ran out of budget
  std::vector<JumpEvent> forward_jumps;
  std::vector<TrajectoryPointRecord> points;
};

struct EnsembleEstimate {
  std::vector<double> times;
  std::vector<cplx> mean;
  std::vector<double> stderr_re;
  std::vector<double> stderr_im;
  std::vector<double> overflow_fraction_by_point;
  int n_traj = 0;
  // Worst-case point fraction; headline runs are flagged above 0.10.
  double overflow_fraction = 0.0;
};

struct DissipativeResult {
  EnsembleEstimate f;
  EnsembleEstimate g;
  std::vector<TrajectoryRecord> records;  // kept only on request
};

// Full interferometric protocol under dissipation.  Per trajectory, the
// forward leg is evolved once over the whole grid; each grid point then
// continues with W, the sign-reversed (dissipation unchanged) backward
// leg, and the final controlled-V.  G is read out along the forward leg.
// Trajectory tau draws from streams keyed (master_seed, tau, leg), so
// results are reproducible and independent of the worker count.
DissipativeResult dissipative_correlators(const ProtocolSpec& spec,
                                          const DissipationParams& params,
                                          const std::vector<double>& times,
                                          int n_traj,
                                          std::uint64_t master_seed,
                                          int threads = 1,
                                          bool keep_records = false);

struct PhotonsLost {
  double forward = 0.0;  // time-ordered measurement of the same duration
  double echo = 0.0;     // OTO measurement: twice the twisting exposure
};

// Expected photons scattered while measuring at protocol time t, from
// the perturbation-theory rates N*gamma (cavity) + 2*N*mu (spontaneous)
// applied over the twisting exposure.  Controlled-phase photons and the
// instantaneous kick rotations are excluded; see output metadata.
PhotonsLost photons_lost(const ProtocolSpec& spec,
                         const DissipationParams& params, double t);

// Number of spin-S irreducible blocks in the N-atom decomposition.
double dicke_multiplicity(int n_atoms, double total_spin);

}  // namespace otoc
