#include "otoc/master_equation.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace otoc {

VectorXcd dicke_to_product(const DickeState& state) {
  const int n = state.spin.two_s;  // fully symmetric sector: N = 2S
  const int dim = 1 << n;
  VectorXcd full = VectorXcd::Zero(dim);
  std::vector<double> inv_sqrt_binom(n + 1);
  for (int k = 0; k <= n; ++k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    inv_sqrt_binom[k] = 1.0 / std::sqrt(b);
  }
  for (int bits = 0; bits < dim; ++bits) {
    const int k = std::popcount(static_cast<unsigned>(bits));  // down spins
    full[bits] = state.amps[k] * inv_sqrt_binom[k];
  }
  return full;
}

namespace {

void require_z_rotation(const Rotation& r, const char* name) {
  if (r.axis != Axis::Z)
    throw std::invalid_argument(std::string("master equation oracle: ") +
                                name + " must be a z rotation");
}

// ---------------------------------------------------------------------
// Full 2^N product space, joint with a control qubit as the top bit.

class FullSpaceLindblad {
 public:
  FullSpaceLindblad(const ProtocolSpec& spec, const DissipationParams& params,
                    int substeps)
      : n_(spec.spin.two_s),
        dim_sys_(1 << n_),
        dim_(dim_sys_ << 1),
        params_(params),
        model_(spec.model),
        substeps_(substeps) {
    if (n_ > 8)
      throw std::invalid_argument("master equation oracle: N must be <= 8");
    if (n_ < 1)
      throw std::invalid_argument("master equation oracle: N must be >= 1");
    if (substeps_ < 1)
      throw std::invalid_argument("master equation oracle: substeps >= 1");
    require_z_rotation(spec.v, "V");
    require_z_rotation(spec.w, "W");
    v_angle_ = spec.v.angle;
    w_angle_ = spec.w.angle;

    mz_.resize(dim_sys_);
    lam_.resize(dim_sys_);
    for (int s = 0; s < dim_sys_; ++s) {
      mz_[s] = 0.5 * (n_ - 2 * std::popcount(static_cast<unsigned>(s)));
      lam_[s] = mz_[s];  // same spectrum in the transformed basis
    }

    CollectiveOps ops{spec.spin};
    DickeState psi = make_initial_state(ops, spec.initial);
    VectorXcd psi_full = dicke_to_product(psi);
    DickeState v_psi = rotate(ops, psi, Axis::Z, v_angle_);
    VectorXcd v_psi_full = dicke_to_product(v_psi);

    VectorXcd joint = VectorXcd::Zero(dim_);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int s = 0; s < dim_sys_; ++s) {
      joint[s] = psi_full[s] * inv_sqrt2;                  // control |0>
      joint[dim_sys_ + s] = v_psi_full[s] * inv_sqrt2;     // control |1>
    }
    rho_ = joint * joint.adjoint();
  }

  void apply_kick(int direction) {
    apply_diag_z(direction * model_.kick_rotation, /*control_mask=*/-1);
  }

  void apply_w() { apply_diag_z(w_angle_, -1); }
  void apply_v_on_branch(int branch) { apply_diag_z(v_angle_, branch); }

  void twist_segment(int h_sign) {
    const double duration =
        model_.kind == ModelSpec::Kind::KickedTop
            ? model_.kick_strength / (n_ * params_.chi)
            : pending_duration_;
    evolve_segment(duration, h_sign);
  }

  void set_pending_duration(double t) { pending_duration_ = t; }

  cplx readout_f() const {
    cplx acc(0.0, 0.0);
    for (int s = 0; s < dim_sys_; ++s) acc += rho_(dim_sys_ + s, s);
    return 2.0 * acc;
  }

  cplx readout_g() const {
    cplx acc(0.0, 0.0);
    for (int s = 0; s < dim_sys_; ++s) {
      const cplx v = std::exp(cplx(0.0, -v_angle_ * mz_[s]));
      acc += std::conj(v) * rho_(dim_sys_ + s, s);
    }
    return 2.0 * acc;
  }

  double trace() const { return rho_.trace().real(); }
  MatrixXcd snapshot() const { return rho_; }
  void restore(const MatrixXcd& rho) { rho_ = rho; }

 private:
  // diag phase exp(-i angle Sz) on the system; control_mask selects the
  // control branch (-1 = both, 0/1 = that branch only).
  void apply_diag_z(double angle, int control_mask) {
    VectorXcd g(dim_);
    for (int idx = 0; idx < dim_; ++idx) {
      const int ctrl = idx >> n_;
      const int s = idx & (dim_sys_ - 1);
      const bool act = control_mask < 0 || ctrl == control_mask;
      g[idx] = act ? std::exp(cplx(0.0, -angle * mz_[s])) : cplx(1.0, 0.0);
    }
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) rho_(r, c) *= g[r] * std::conj(g[c]);
  }

  // Walsh-Hadamard transform of the system bits on both sides of rho
  // (the product-basis diagonalization of Sx).
  void hadamard_all() {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int bit = 0; bit < n_; ++bit) {
      const int b = 1 << bit;
      // columns
      for (int c = 0; c < dim_; ++c) {
        if (c & b) continue;
        const int c1 = c | b;
        if ((c >> n_) != (c1 >> n_)) continue;  // control untouched
        for (int r = 0; r < dim_; ++r) {
          const cplx x = rho_(r, c), y = rho_(r, c1);
          rho_(r, c) = (x + y) * inv_sqrt2;
          rho_(r, c1) = (x - y) * inv_sqrt2;
        }
      }
      // rows
      for (int r = 0; r < dim_; ++r) {
        if (r & b) continue;
        const int r1 = r | b;
        if ((r >> n_) != (r1 >> n_)) continue;
        for (int c = 0; c < dim_; ++c) {
          const cplx x = rho_(r, c), y = rho_(r1, c);
          rho_(r, c) = (x + y) * inv_sqrt2;
          rho_(r1, c) = (x - y) * inv_sqrt2;
        }
      }
    }
  }

  // Exact twisting + cavity dephasing factor map for time h, applied in
  // the transformed basis.
  void apply_a_map(double h, int h_sign) {
    for (int r = 0; r < dim_; ++r) {
      const double lr = lam_[r & (dim_sys_ - 1)];
      for (int c = 0; c < dim_; ++c) {
        const double lc = lam_[c & (dim_sys_ - 1)];
        const double phase = -h_sign * params_.chi * (lr * lr - lc * lc) * h;
        const double decay = -0.5 * params_.gamma * (lr - lc) * (lr - lc) * h;
        rho_(r, c) *= std::exp(cplx(decay, phase));
      }
    }
  }

  // Exact single-atom depolarizing channels for time h; form-invariant
  // under the basis change, so valid on transformed labels.
  void apply_b_map(double h) {
    if (params_.mu == 0.0) return;
    const double e = std::exp(-2.0 * params_.mu * h);
    for (int atom = 0; atom < n_; ++atom) {
      const int b = 1 << atom;
      for (int r = 0; r < dim_; ++r) {
        if (r & b) continue;
        const int r1 = r | b;
        if ((r >> n_) != (r1 >> n_)) continue;
        for (int c = 0; c < dim_; ++c) {
          if (c & b) continue;
          const int c1 = c | b;
          if ((c >> n_) != (c1 >> n_)) continue;
          const cplx p00 = rho_(r, c), p11 = rho_(r1, c1);
          const cplx avg = 0.5 * (p00 + p11), diff = 0.5 * (p00 - p11);
          rho_(r, c) = avg + e * diff;
          rho_(r1, c1) = avg - e * diff;
          rho_(r, c1) *= e;
          rho_(r1, c) *= e;
        }
      }
    }
  }

  void evolve_segment(double duration, int h_sign) {
    if (duration <= 0.0) return;
    hadamard_all();
    const double h = duration / substeps_;
    apply_b_map(0.5 * h);
    for (int step = 0; step < substeps_; ++step) {
      apply_a_map(h, h_sign);
      apply_b_map(step + 1 < substeps_ ? h : 0.5 * h);
    }
    hadamard_all();
  }

  int n_;
  int dim_sys_;
  int dim_;
  DissipationParams params_;
  ModelSpec model_;
  int substeps_;
  double v_angle_ = 0.0;
  double w_angle_ = 0.0;
  double pending_duration_ = 0.0;
  std::vector<double> mz_;
  std::vector<double> lam_;
  MatrixXcd rho_;
};

// ---------------------------------------------------------------------
// Dicke-sector variant; cavity decay only.

class DickeSectorLindblad {
 public:
  DickeSectorLindblad(const ProtocolSpec& spec,
                      const DissipationParams& params)
      : spin_(spec.spin),
        dim_sys_(spec.spin.dim()),
        dim_(2 * spec.spin.dim()),
        params_(params),
        model_(spec.model),
        ops_(spec.spin) {
    if (params_.mu != 0.0)
      throw std::invalid_argument(
          "dicke-sector oracle: spontaneous emission breaks the sector");
    require_z_rotation(spec.v, "V");
    require_z_rotation(spec.w, "W");
    v_angle_ = spec.v.angle;
    w_angle_ = spec.w.angle;

    DickeState psi = make_initial_state(ops_, spec.initial);
    DickeState v_psi = rotate(ops_, psi, Axis::Z, v_angle_);
    VectorXcd joint = VectorXcd::Zero(dim_);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    joint.head(dim_sys_) = psi.amps * inv_sqrt2;
    joint.tail(dim_sys_) = v_psi.amps * inv_sqrt2;
    rho_ = joint * joint.adjoint();
  }

  void apply_kick(int direction) {
    apply_diag_z(direction * model_.kick_rotation, -1);
  }
  void apply_w() { apply_diag_z(w_angle_, -1); }
  void apply_v_on_branch(int branch) { apply_diag_z(v_angle_, branch); }

  void set_pending_duration(double t) { pending_duration_ = t; }

  void twist_segment(int h_sign) {
    const double duration =
        model_.kind == ModelSpec::Kind::KickedTop
            ? model_.kick_strength / (spin_.two_s * params_.chi)
            : pending_duration_;
    if (duration <= 0.0) return;
    const MatrixXcd& v = ops_.eigvecs(Axis::X);
    MatrixXcd big = MatrixXcd::Zero(dim_, dim_);
    big.topLeftCorner(dim_sys_, dim_sys_) = v;
    big.bottomRightCorner(dim_sys_, dim_sys_) = v;
    rho_ = (big.adjoint() * rho_ * big).eval();
    for (int r = 0; r < dim_; ++r) {
      const double lr = ops_.ladder_eigs()[r % dim_sys_];
      for (int c = 0; c < dim_; ++c) {
        const double lc = ops_.ladder_eigs()[c % dim_sys_];
        const double phase =
            -h_sign * params_.chi * (lr * lr - lc * lc) * duration;
        const double decay =
            -0.5 * params_.gamma * (lr - lc) * (lr - lc) * duration;
        rho_(r, c) *= std::exp(cplx(decay, phase));
      }
    }
    rho_ = (big * rho_ * big.adjoint()).eval();
  }

  cplx readout_f() const {
    cplx acc(0.0, 0.0);
    for (int s = 0; s < dim_sys_; ++s) acc += rho_(dim_sys_ + s, s);
    return 2.0 * acc;
  }

  cplx readout_g() const {
    cplx acc(0.0, 0.0);
    for (int s = 0; s < dim_sys_; ++s) {
      const cplx v = std::exp(cplx(0.0, -v_angle_ * ops_.mz()[s]));
      acc += std::conj(v) * rho_(dim_sys_ + s, s);
    }
    return 2.0 * acc;
  }

  double trace() const { return rho_.trace().real(); }
  MatrixXcd snapshot() const { return rho_; }
  void restore(const MatrixXcd& rho) { rho_ = rho; }

 private:
  void apply_diag_z(double angle, int control_mask) {
    VectorXcd g(dim_);
    for (int idx = 0; idx < dim_; ++idx) {
      const int ctrl = idx / dim_sys_;
      const int s = idx % dim_sys_;
      const bool act = control_mask < 0 || ctrl == control_mask;
      g[idx] =
          act ? std::exp(cplx(0.0, -angle * ops_.mz()[s])) : cplx(1.0, 0.0);
    }
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) rho_(r, c) *= g[r] * std::conj(g[c]);
  }

  SpinQuantum spin_;
  int dim_sys_;
  int dim_;
  DissipationParams params_;
  ModelSpec model_;
  CollectiveOps ops_;
  double v_angle_ = 0.0;
  double w_angle_ = 0.0;
  double pending_duration_ = 0.0;
  MatrixXcd rho_;
};

// The shared protocol walk: forward leg once with G readouts and
// snapshots, then the echo continuation per grid point.
template <typename Sim>
OracleSeries protocol_walk(Sim& sim, const ProtocolSpec& spec,
                           const std::vector<double>& times) {
  const bool kicked = spec.model.kind == ModelSpec::Kind::KickedTop;
  std::vector<int> kick_grid;
  if (kicked)
    for (double t : times) kick_grid.push_back(validated_kick_count(t));
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw std::invalid_argument("oracle: times must be ascending");

  OracleSeries out;
  out.times = times;
  out.f.resize(times.size());
  out.g.resize(times.size());

  std::vector<MatrixXcd> snaps;
  snaps.reserve(times.size());
  int kicks_done = 0;
  double t_done = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (kicked) {
      while (kicks_done < kick_grid[i]) {
        sim.apply_kick(+1);
        sim.twist_segment(+1);
        ++kicks_done;
      }
    } else if (times[i] > t_done) {
      sim.set_pending_duration(times[i] - t_done);
      sim.twist_segment(+1);
      t_done = times[i];
    }
    out.g[i] = sim.readout_g();
    out.max_trace_deviation =
        std::max(out.max_trace_deviation, std::abs(sim.trace() - 1.0));
    snaps.push_back(sim.snapshot());
  }

  for (std::size_t i = 0; i < times.size(); ++i) {
    sim.restore(snaps[i]);
    sim.apply_w();
    if (kicked) {
      for (int k = 0; k < kick_grid[i]; ++k) {
        sim.twist_segment(-1);
        sim.apply_kick(-1);
      }
    } else if (times[i] > 0.0) {
      sim.set_pending_duration(times[i]);
      sim.twist_segment(-1);
    }
    sim.apply_v_on_branch(0);
    out.f[i] = sim.readout_f();
    out.max_trace_deviation =
        std::max(out.max_trace_deviation, std::abs(sim.trace() - 1.0));
  }
  return out;
}

}  // namespace

OracleSeries master_equation_oracle(const ProtocolSpec& spec,
                                    const DissipationParams& params,
                                    const std::vector<double>& times,
                                    int substeps_per_segment) {
  FullSpaceLindblad sim(spec, params, substeps_per_segment);
  return protocol_walk(sim, spec, times);
}

OracleSeries master_equation_oracle_dicke(const ProtocolSpec& spec,
                                          const DissipationParams& params,
                                          const std::vector<double>& times) {
  DickeSectorLindblad sim(spec, params);
  return protocol_walk(sim, spec, times);
}

}  // namespace otoc
