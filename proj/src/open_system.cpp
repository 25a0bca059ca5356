#include "otoc/open_system.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "otoc/parallel.hpp"

namespace otoc {

DissipationParams DissipationParams::from_cavity(double chi, double eta,
                                                 double d,
                                                 int photon_budget) {
  if (!(chi > 0.0) || !(eta > 0.0) || !(d > 0.0))
    throw std::invalid_argument("dissipation: chi, eta, d must be > 0");
  if (photon_budget < 0)
    throw std::invalid_argument("dissipation: photon budget must be >= 0");
  DissipationParams p;
  p.chi = chi;
  p.eta = eta;
  p.d = d;
  p.gamma = 2.0 * chi / d;
  p.mu = chi * d / (4.0 * eta);
  p.photon_budget = photon_budget;
  return p;
}

DissipationParams DissipationParams::from_rates(double chi, double gamma,
                                                double mu, int photon_budget) {
  if (!(chi > 0.0) || gamma < 0.0 || mu < 0.0 || photon_budget < 0)
    throw std::invalid_argument("dissipation: invalid rates");
  DissipationParams p;
  p.chi = chi;
  p.gamma = gamma;
  p.mu = mu;
  p.photon_budget = photon_budget;
  return p;
}

DissipationParams DissipationParams::none() {
  DissipationParams p;
  p.chi = 1.0;
  return p;
}

const char* jump_channel_name(JumpChannelKind kind) {
  switch (kind) {
    case JumpChannelKind::Cavity: return "cavity";
    case JumpChannelKind::SpFlipUp: return "sp_flip_up";
    case JumpChannelKind::SpFlipDown: return "sp_flip_down";
    case JumpChannelKind::SpProjUp: return "sp_proj_up";
    default: return "sp_proj_down";
  }
}

std::vector<JumpChannel> jump_operators(int n_atoms,
                                        const DissipationParams& params) {
  if (n_atoms < 1)
    throw std::invalid_argument("jump operators: need N >= 1");
  std::vector<JumpChannel> channels;
  if (params.gamma > 0.0)
    channels.push_back({JumpChannelKind::Cavity, -1, params.gamma});
  if (params.mu > 0.0) {
    for (int i = 0; i < n_atoms; ++i) {
      channels.push_back({JumpChannelKind::SpFlipUp, i, params.mu});
      channels.push_back({JumpChannelKind::SpFlipDown, i, params.mu});
      channels.push_back({JumpChannelKind::SpProjUp, i, params.mu});
      channels.push_back({JumpChannelKind::SpProjDown, i, params.mu});
    }
  }
  return channels;
}

HybridState HybridState::from_dicke(const DickeState& state) {
  HybridState h;
  h.n_atoms = state.spin.two_s;
  h.n_tracked = 0;
  h.amps = state.amps;
  return h;
}

// ---------------------------------------------------------------------------
// TrajectoryEngine

struct TrajectoryEngine::CollectiveBasis {
  int two_s = 0;
  VectorXd mz;    // m = S_c .. -S_c
  VectorXd eigs;  // ascending, shared by Sx and Sy
  MatrixXcd xv, yv;
  VectorXd ladder;  // <m+1|S+|m> coefficient indexed by the lower state
};

TrajectoryEngine::TrajectoryEngine(int n_atoms, ModelSpec model,
                                   DissipationParams params)
    : n_atoms_(n_atoms), model_(model), params_(params) {
  if (n_atoms_ < 1)
    throw std::invalid_argument("trajectory engine: need N >= 1");
  dicke_ops_ = std::make_shared<const CollectiveOps>(SpinQuantum(n_atoms_));

  const int max_tracked = std::min(params_.photon_budget, n_atoms_);
  bases_.resize(max_tracked + 1);
  for (int n = 0; n <= max_tracked; ++n) {
    auto b = std::make_shared<CollectiveBasis>();
    b->two_s = n_atoms_ - n;
    const int d = b->two_s + 1;
    if (b->two_s == 0) {
      b->mz = VectorXd::Zero(1);
      b->eigs = VectorXd::Zero(1);
      b->xv = MatrixXcd::Identity(1, 1);
      b->yv = MatrixXcd::Identity(1, 1);
      b->ladder = VectorXd::Zero(1);
    } else {
      CollectiveOps ops{SpinQuantum(b->two_s)};
      b->mz = ops.mz();
      b->eigs = ops.ladder_eigs();
      b->xv = ops.eigvecs(Axis::X);
      b->yv = ops.eigvecs(Axis::Y);
      b->ladder = VectorXd::Zero(d);
      const double s = 0.5 * b->two_s;
      const double ssp1 = 0.25 * b->two_s * (b->two_s + 2);
      for (int k = 1; k < d; ++k) {
        const double m = s - k;
        b->ladder[k] = std::sqrt(ssp1 - m * (m + 1.0));
      }
    }
    bases_[n] = std::move(b);
  }
}

const TrajectoryEngine::CollectiveBasis& TrajectoryEngine::basis(
    int n_tracked) const {
  if (n_tracked < 0 || n_tracked >= static_cast<int>(bases_.size()))
    throw std::logic_error("trajectory engine: no basis for tracked count");
  return *bases_[n_tracked];
}

HybridState TrajectoryEngine::initial_hybrid(const InitialState& init) const {
  return HybridState::from_dicke(make_initial_state(*dicke_ops_, init));
}

namespace {

inline double tracked_half_sum(int bits, int n_tracked) {
  return 0.5 * (n_tracked - 2 * std::popcount(static_cast<unsigned>(bits)));
}

// In-place 2x2 basis change on tracked bit j for all entries.
template <typename F>
void for_each_bit_pair(VectorXcd& amps, int dim, int bit, F&& f) {
  const int b = 1 << bit;
  for (int base = 0; base < dim; ++base) {
    if (base & b) continue;
    f(amps[base], amps[base | b]);
  }
}

}  // namespace

void TrajectoryEngine::to_ladder_basis(HybridState& state, Axis axis) const {
  const CollectiveBasis& cb = basis(state.n_tracked);
  const MatrixXcd& v = (axis == Axis::X) ? cb.xv : cb.yv;
  const int dc = state.collective_dim();
  const int dt = state.tracked_dim();
  if (dc > 1) {
    Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>
        a(state.amps.data(), dc, dt);
    a = (v.adjoint() * a).eval();
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < state.n_tracked; ++j) {
    if (axis == Axis::X) {
      for_each_bit_pair(state.amps, state.dim(), j, [&](cplx& a0, cplx& a1) {
        const cplx u = (a0 + a1) * inv_sqrt2;
        const cplx d = (a0 - a1) * inv_sqrt2;
        a0 = u;
        a1 = d;
      });
    } else {
      for_each_bit_pair(state.amps, state.dim(), j, [&](cplx& a0, cplx& a1) {
        const cplx u = (a0 - cplx(0, 1) * a1) * inv_sqrt2;
        const cplx d = (a0 + cplx(0, 1) * a1) * inv_sqrt2;
        a0 = u;
        a1 = d;
      });
    }
  }
}

void TrajectoryEngine::from_ladder_basis(HybridState& state, Axis axis) const {
  const CollectiveBasis& cb = basis(state.n_tracked);
  const MatrixXcd& v = (axis == Axis::X) ? cb.xv : cb.yv;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < state.n_tracked; ++j) {
    if (axis == Axis::X) {
      for_each_bit_pair(state.amps, state.dim(), j, [&](cplx& c0, cplx& c1) {
        const cplx a0 = (c0 + c1) * inv_sqrt2;
        const cplx a1 = (c0 - c1) * inv_sqrt2;
        c0 = a0;
        c1 = a1;
      });
    } else {
      for_each_bit_pair(state.amps, state.dim(), j, [&](cplx& c0, cplx& c1) {
        const cplx a0 = (c0 + c1) * inv_sqrt2;
        const cplx a1 = cplx(0, 1) * (c0 - c1) * inv_sqrt2;
        c0 = a0;
        c1 = a1;
      });
    }
  }
  const int dc = state.collective_dim();
  const int dt = state.tracked_dim();
  if (dc > 1) {
    Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>
        a(state.amps.data(), dc, dt);
    a = (v * a).eval();
  }
}

void TrajectoryEngine::fill_ladder_eigs(const HybridState& state,
                                        std::vector<double>& eigs) const {
  const CollectiveBasis& cb = basis(state.n_tracked);
  const int dc = state.collective_dim();
  const int dt = state.tracked_dim();
  eigs.resize(state.dim());
  for (int kc = 0; kc < dc; ++kc)
    for (int t = 0; t < dt; ++t)
      eigs[kc * dt + t] = cb.eigs[kc] + tracked_half_sum(t, state.n_tracked);
}

void TrajectoryEngine::apply_rotation(HybridState& state,
                                      const Rotation& r) const {
  const CollectiveBasis& cb = basis(state.n_tracked);
  const int dc = state.collective_dim();
  const int dt = state.tracked_dim();
  if (r.axis == Axis::Z) {
    for (int kc = 0; kc < dc; ++kc)
      for (int t = 0; t < dt; ++t) {
        const double m = cb.mz[kc] + tracked_half_sum(t, state.n_tracked);
        state.amps[kc * dt + t] *= std::exp(cplx(0.0, -r.angle * m));
      }
    return;
  }
  to_ladder_basis(state, r.axis);
  for (int kc = 0; kc < dc; ++kc)
    for (int t = 0; t < dt; ++t) {
      const double lam = cb.eigs[kc] + tracked_half_sum(t, state.n_tracked);
      state.amps[kc * dt + t] *= std::exp(cplx(0.0, -r.angle * lam));
    }
  from_ladder_basis(state, r.axis);
}

HybridState TrajectoryEngine::promote_next_atom(
    const HybridState& state) const {
  const int dc = state.collective_dim();
  if (dc <= 1)
    throw std::logic_error("promote: no untouched atoms left");
  const int dt = state.tracked_dim();
  const double sc = state.collective_spin();

  HybridState out;
  out.n_atoms = state.n_atoms;
  out.n_tracked = state.n_tracked + 1;
  out.amps = VectorXcd::Zero((dc - 1) * 2 * dt);
  const int new_dt = 2 * dt;
  const int new_bit = 1 << state.n_tracked;

  for (int kc = 0; kc < dc; ++kc) {
    const double m = sc - kc;
    const double alpha = std::sqrt((sc + m) / (2.0 * sc));
    const double beta = std::sqrt((sc - m) / (2.0 * sc));
    for (int t = 0; t < dt; ++t) {
      const cplx amp = state.amps[kc * dt + t];
      if (amp == cplx(0.0, 0.0)) continue;
      if (kc <= dc - 2) out.amps[kc * new_dt + t] += alpha * amp;
      if (kc >= 1) out.amps[(kc - 1) * new_dt + t + new_bit] += beta * amp;
    }
  }
  return out;
}

void TrajectoryEngine::apply_jump(HybridState& state, JumpChannelKind kind,
                                  int atom) const {
  if (kind == JumpChannelKind::Cavity) {
    // Sx_total in the computational basis: collective tridiagonal part
    // plus 1/2 flip on each tracked bit.
    const CollectiveBasis& cb = basis(state.n_tracked);
    const int dc = state.collective_dim();
    const int dt = state.tracked_dim();
    VectorXcd out = VectorXcd::Zero(state.dim());
    for (int kc = 0; kc < dc; ++kc)
      for (int t = 0; t < dt; ++t) {
        const cplx amp = state.amps[kc * dt + t];
        if (kc >= 1) out[(kc - 1) * dt + t] += 0.5 * cb.ladder[kc] * amp;
        if (kc + 1 < dc) out[(kc + 1) * dt + t] += 0.5 * cb.ladder[kc + 1] * amp;
      }
    for (int j = 0; j < state.n_tracked; ++j) {
      const int b = 1 << j;
      for (int kc = 0; kc < dc; ++kc)
        for (int t = 0; t < dt; ++t)
          out[kc * dt + (t ^ b)] += 0.5 * state.amps[kc * dt + t];
    }
    state.amps = std::move(out);
    return;
  }

  if (atom < 0 || atom >= state.n_atoms)
    throw std::invalid_argument("apply_jump: atom index out of range");
  if (atom >= state.n_tracked) {
    if (atom != state.n_tracked)
      throw std::invalid_argument(
          "apply_jump: untouched atoms are promoted in order");
    state = promote_next_atom(state);
  }
  const int b = 1 << atom;
  for_each_bit_pair(state.amps, state.dim(), atom, [&](cplx& up, cplx& dn) {
    switch (kind) {
      case JumpChannelKind::SpFlipUp:  // |up><down|
        up = dn;
        dn = 0.0;
        break;
      case JumpChannelKind::SpFlipDown:  // |down><up|
        dn = up;
        up = 0.0;
        break;
      case JumpChannelKind::SpProjUp:
        dn = 0.0;
        break;
      default:  // SpProjDown
        up = 0.0;
        break;
    }
  });
  (void)b;
}

double TrajectoryEngine::sx_total_expectation(const HybridState& state) const {
  HybridState tmp = state;
  apply_jump(tmp, JumpChannelKind::Cavity, -1);
  return state.amps.dot(tmp.amps).real();
}

double TrajectoryEngine::sz_collective_expectation(
    const HybridState& state) const {
  const CollectiveBasis& cb = basis(state.n_tracked);
  const int dc = state.collective_dim();
  const int dt = state.tracked_dim();
  double acc = 0.0;
  for (int kc = 0; kc < dc; ++kc) {
    double row = 0.0;
    for (int t = 0; t < dt; ++t) row += std::norm(state.amps[kc * dt + t]);
    acc += cb.mz[kc] * row;
  }
  return acc;
}

namespace {

struct SegmentTables {
  std::vector<int> bucket;       // per amplitude entry
  std::vector<double> lambda2;   // per bucket
  std::vector<double> rate;      // per bucket: gamma lam^2 + 2 mu N
  std::vector<double> weight;    // per bucket, joint over states
};

double solve_jump_time(const SegmentTables& tab, double u, double t_max) {
  double lo = 0.0, hi = t_max, s = 0.5 * t_max;
  for (int iter = 0; iter < 100; ++iter) {
    double q = 0.0, dq = 0.0;
    for (std::size_t b = 0; b < tab.weight.size(); ++b) {
      if (tab.weight[b] == 0.0) continue;
      const double e = tab.weight[b] * std::exp(-tab.rate[b] * s);
      q += e;
      dq -= tab.rate[b] * e;
    }
    if (q > u)
      lo = s;
    else
      hi = s;
    if (std::abs(q - u) < 1e-14 * u || hi - lo < 1e-16 * t_max) break;
    const double newton = s - (q - u) / dq;
    s = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
  }
  return s;
}

}  // namespace

std::vector<JumpEvent> TrajectoryEngine::twist_segment(
    std::span<HybridState> states, double duration, int h_sign,
    TrajectoryCtx& ctx, RngStream& rng) const {
  std::vector<JumpEvent> events;
  if (states.empty()) throw std::invalid_argument("twist segment: no states");
  if (!(duration >= 0.0))
    throw std::invalid_argument("twist segment: duration must be >= 0");
  if (duration == 0.0) return events;

  const double chi = params_.chi;
  const double n_states = static_cast<double>(states.size());
  const int nb = 2 * n_atoms_ + 1;

  for (auto& s : states) to_ladder_basis(s, Axis::X);

  std::vector<double> eigs;
  SegmentTables tab;
  auto rebuild_static = [&] {
    fill_ladder_eigs(states[0], eigs);
    tab.bucket.resize(eigs.size());
    tab.lambda2.assign(nb, 0.0);
    tab.rate.assign(nb, 0.0);
    for (std::size_t e = 0; e < eigs.size(); ++e) {
      const int b = static_cast<int>(std::lround(2.0 * eigs[e])) + n_atoms_;
      tab.bucket[e] = b;
    }
    for (int b = 0; b < nb; ++b) {
      const double lam = 0.5 * (b - n_atoms_);
      tab.lambda2[b] = lam * lam;
      tab.rate[b] = params_.gamma * lam * lam + 2.0 * params_.mu * n_atoms_;
    }
  };
  auto rebuild_weights = [&] {
    tab.weight.assign(nb, 0.0);
    for (const auto& s : states)
      for (int e = 0; e < s.dim(); ++e)
        tab.weight[tab.bucket[e]] += std::norm(s.amps[e]);
    for (double& w : tab.weight) w /= n_states;
  };
  auto apply_factors = [&](double s, bool dissipative) {
    std::vector<cplx> factor(nb);
    for (int b = 0; b < nb; ++b) {
      const double phase = -h_sign * chi * tab.lambda2[b] * s;
      const double decay = dissipative ? -0.5 * tab.rate[b] * s : 0.0;
      factor[b] = std::exp(cplx(decay, phase));
    }
    for (auto& st : states)
      for (int e = 0; e < st.dim(); ++e) st.amps[e] *= factor[tab.bucket[e]];
  };

  rebuild_static();

  double remaining = duration;
  while (remaining > 0.0) {
    const bool dissipative = !params_.zero() && !ctx.overflowed;
    if (!dissipative) {
      apply_factors(remaining, false);
      ctx.time += remaining;
      remaining = 0.0;
      break;
    }
    rebuild_weights();
    double q_end = 0.0;
    for (int b = 0; b < nb; ++b)
      q_end += tab.weight[b] * std::exp(-tab.rate[b] * remaining);
    if (q_end >= ctx.threshold) {
      apply_factors(remaining, true);
      ctx.time += remaining;
      remaining = 0.0;
      break;
    }

    const double s = solve_jump_time(tab, ctx.threshold, remaining);
    apply_factors(s, true);
    ctx.time += s;
    remaining -= s;

    // Channel split: total spontaneous weight is 2 mu N <1> exactly.
    rebuild_weights();
    double q_now = 0.0, cavity_w = 0.0;
    for (int b = 0; b < nb; ++b) {
      q_now += tab.weight[b];
      cavity_w += tab.weight[b] * tab.lambda2[b];
    }
    cavity_w *= params_.gamma;
    const double spont_w = 2.0 * params_.mu * n_atoms_ * q_now;
    const double pick = rng.uniform() * (cavity_w + spont_w);

    if (pick < cavity_w || spont_w == 0.0) {
      // Sx is diagonal here; apply and renormalize jointly.
      for (auto& st : states)
        for (int e = 0; e < st.dim(); ++e)
          st.amps[e] *= eigs[e];
      double q = 0.0;
      for (const auto& st : states) q += st.norm2();
      q /= n_states;
      if (q < 1e-14)
        throw std::runtime_error("trajectory: norm underflow at cavity jump");
      const double scale = 1.0 / std::sqrt(q);
      for (auto& st : states) st.amps *= scale;
      events.push_back({ctx.time, JumpChannelKind::Cavity, -1});
      ctx.threshold = rng.uniform();
      continue;
    }

    // Spontaneous jump: needs computational-basis quantities.
    for (auto& st : states) from_ladder_basis(st, Axis::X);

    const int n_tracked = states[0].n_tracked;
    const int nu = n_atoms_ - n_tracked;
    struct Cand {
      JumpChannelKind kind;
      int atom;
      double w;
    };
    std::vector<Cand> cands;
    cands.reserve(4 * (n_tracked + 1));
    if (nu > 0) {
      double pn = 0.0, szc = 0.0;
      for (const auto& st : states) {
        pn += st.norm2();
        szc += sz_collective_expectation(st);
      }
      const double pu = std::max(0.0, 0.5 * pn + szc / nu);
      const double pd = std::max(0.0, 0.5 * pn - szc / nu);
      const int a = n_tracked;  // next promoted index
      cands.push_back({JumpChannelKind::SpFlipUp, a, nu * params_.mu * pd});
      cands.push_back({JumpChannelKind::SpFlipDown, a, nu * params_.mu * pu});
      cands.push_back({JumpChannelKind::SpProjUp, a, nu * params_.mu * pu});
      cands.push_back({JumpChannelKind::SpProjDown, a, nu * params_.mu * pd});
    }
    for (int j = 0; j < n_tracked; ++j) {
      double puj = 0.0, pdj = 0.0;
      const int b = 1 << j;
      for (const auto& st : states)
        for (int e = 0; e < st.dim(); ++e) {
          if (e & b)
            pdj += std::norm(st.amps[e]);
          else
            puj += std::norm(st.amps[e]);
        }
      cands.push_back({JumpChannelKind::SpFlipUp, j, params_.mu * pdj});
      cands.push_back({JumpChannelKind::SpFlipDown, j, params_.mu * puj});
      cands.push_back({JumpChannelKind::SpProjUp, j, params_.mu * puj});
      cands.push_back({JumpChannelKind::SpProjDown, j, params_.mu * pdj});
    }
    double total = 0.0;
    for (const auto& c : cands) total += c.w;
    if (!(total > 0.0))
      throw std::runtime_error("trajectory: no spontaneous channel available");
    double r = rng.uniform() * total;
    const Cand* chosen = &cands.back();
    for (const auto& c : cands) {
      if (r < c.w) {
        chosen = &c;
        break;
      }
      r -= c.w;
    }

    for (auto& st : states) apply_jump(st, chosen->kind, chosen->atom);
    double q = 0.0;
    for (const auto& st : states) q += st.norm2();
    q /= n_states;
    if (q < 1e-14)
      throw std::runtime_error("trajectory: norm underflow at spontaneous jump");
    const double scale = 1.0 / std::sqrt(q);
    for (auto& st : states) st.amps *= scale;

    events.push_back({ctx.time, chosen->kind, chosen->atom});
    ctx.spont_count += 1;
    if (ctx.spont_count >= params_.photon_budget) ctx.overflowed = true;
    ctx.threshold = rng.uniform();

    for (auto& st : states) to_ladder_basis(st, Axis::X);
    rebuild_static();
  }

  for (auto& s : states) from_ladder_basis(s, Axis::X);
  return events;
}

std::vector<JumpEvent> TrajectoryEngine::step(std::span<HybridState> states,
                                              TimeDirection direction,
                                              double dt, TrajectoryCtx& ctx,
                                              RngStream& rng) const {
  if (model_.kind == ModelSpec::Kind::Twisting) {
    const int sign = direction == TimeDirection::Forward ? 1 : -1;
    return twist_segment(states, dt, sign, ctx, rng);
  }
  const double period = model_.kick_strength / (n_atoms_ * params_.chi);
  if (direction == TimeDirection::Forward) {
    const Rotation kick{Axis::Z, model_.kick_rotation};
    for (auto& s : states) apply_rotation(s, kick);
    return twist_segment(states, period, +1, ctx, rng);
  }
  auto events = twist_segment(states, period, -1, ctx, rng);
  const Rotation unkick{Axis::Z, -model_.kick_rotation};
  for (auto& s : states) apply_rotation(s, unkick);
  return events;
}

std::vector<JumpEvent> trajectory_step(const TrajectoryEngine& engine,
                                       HybridState& state,
                                       TimeDirection direction, double dt,
                                       TrajectoryCtx& ctx, RngStream& rng) {
  if (!(state.norm2() > 0.0))
    throw std::invalid_argument("trajectory step: state norm must be > 0");
  return engine.step(std::span<HybridState>(&state, 1), direction, dt, ctx,
                     rng);
}

// ---------------------------------------------------------------------------
// Ensemble protocol

namespace {

struct TrajectoryWork {
  std::vector<cplx> f, g;
  std::vector<char> overflow;
  TrajectoryRecord record;
};

void maybe_flag_overflow(TrajectoryCtx& ctx, const DissipationParams& params) {
  if (params.mu > 0.0 && ctx.spont_count >= params.photon_budget)
    ctx.overflowed = true;
}

}  // namespace

DissipativeResult dissipative_correlators(const ProtocolSpec& spec,
                                          const DissipationParams& params,
                                          const std::vector<double>& times,
                                          int n_traj,
                                          std::uint64_t master_seed,
                                          int threads, bool keep_records) {
  if (n_traj < 1)
    throw std::invalid_argument("dissipative correlators: need n_traj >= 1");
  if (times.empty())
    throw std::invalid_argument("dissipative correlators: empty time grid");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || (i > 0 && times[i] <= times[i - 1]))
      throw std::invalid_argument(
          "dissipative correlators: times must be ascending and >= 0");
  }
  const bool kicked = spec.model.kind == ModelSpec::Kind::KickedTop;
  std::vector<int> kick_grid;
  if (kicked)
    for (double t : times) kick_grid.push_back(validated_kick_count(t));

  const int n_atoms = spec.spin.two_s;
  TrajectoryEngine engine(n_atoms, spec.model, params);
  const int n_points = static_cast<int>(times.size());

  std::vector<TrajectoryWork> work(n_traj);

  parallel_for(n_traj, threads, [&](int tau) {
    TrajectoryWork& out = work[tau];
    out.f.resize(n_points);
    out.g.resize(n_points);
    out.overflow.assign(n_points, 0);
    out.record.trajectory_index = tau;
    out.record.master_seed = master_seed;

    RngStream rng_f = RngStream::keyed(master_seed, tau, 0);
    std::array<HybridState, 2> branches{engine.initial_hybrid(spec.initial),
                                        engine.initial_hybrid(spec.initial)};
    engine.apply_rotation(branches[1], spec.v);

    TrajectoryCtx ctx;
    ctx.threshold = rng_f.uniform();
    maybe_flag_overflow(ctx, params);

    struct Snapshot {
      std::array<HybridState, 2> branches;
      TrajectoryCtx ctx;
    };
    std::vector<Snapshot> snaps;
    snaps.reserve(n_points);

    int kicks_done = 0;
    double t_done = 0.0;
    for (int i = 0; i < n_points; ++i) {
      if (kicked) {
        while (kicks_done < kick_grid[i]) {
          auto ev = engine.step(branches, TimeDirection::Forward, 0.0, ctx,
                                rng_f);
          out.record.forward_jumps.insert(out.record.forward_jumps.end(),
                                          ev.begin(), ev.end());
          ++kicks_done;
        }
      } else if (times[i] > t_done) {
        auto ev = engine.step(branches, TimeDirection::Forward,
                              times[i] - t_done, ctx, rng_f);
        out.record.forward_jumps.insert(out.record.forward_jumps.end(),
                                        ev.begin(), ev.end());
        t_done = times[i];
      }
      const double q =
          0.5 * (branches[0].norm2() + branches[1].norm2());
      HybridState vb0 = branches[0];
      engine.apply_rotation(vb0, spec.v);
      out.g[i] = vb0.amps.dot(branches[1].amps) / q;
      snaps.push_back({branches, ctx});
    }

    for (int i = 0; i < n_points; ++i) {
      std::array<HybridState, 2> br = snaps[i].branches;
      TrajectoryCtx bctx = snaps[i].ctx;
      RngStream rng_b = RngStream::keyed(master_seed, tau, 1 + i);
      engine.apply_rotation(br[0], spec.w);
      engine.apply_rotation(br[1], spec.w);
      std::vector<JumpEvent> bwd;
      if (kicked) {
        for (int n = 0; n < kick_grid[i]; ++n) {
          auto ev =
              engine.step(br, TimeDirection::Backward, 0.0, bctx, rng_b);
          bwd.insert(bwd.end(), ev.begin(), ev.end());
        }
      } else if (times[i] > 0.0) {
        auto ev =
            engine.step(br, TimeDirection::Backward, times[i], bctx, rng_b);
        bwd.insert(bwd.end(), ev.begin(), ev.end());
      }
      engine.apply_rotation(br[0], spec.v);
      const double q = 0.5 * (br[0].norm2() + br[1].norm2());
      out.f[i] = br[0].amps.dot(br[1].amps) / q;
      out.overflow[i] = bctx.overflowed ? 1 : 0;

      TrajectoryPointRecord point;
      point.t = times[i];
      point.f = out.f[i];
      point.g = out.g[i];
      point.overflowed = bctx.overflowed;
      point.backward_jumps = std::move(bwd);
      out.record.points.push_back(std::move(point));
      out.record.overflowed |= bctx.overflowed;
    }
  });

  // Index-ordered reduction keeps the estimate independent of scheduling.
  DissipativeResult result;
  for (EnsembleEstimate* est : {&result.f, &result.g}) {
    est->times = times;
    est->n_traj = n_traj;
    est->mean.assign(n_points, cplx(0.0, 0.0));
    est->stderr_re.assign(n_points, 0.0);
    est->stderr_im.assign(n_points, 0.0);
    est->overflow_fraction_by_point.assign(n_points, 0.0);
  }
  for (int i = 0; i < n_points; ++i) {
    cplx sf(0, 0), sg(0, 0);
    int overflowed = 0;
    for (int tau = 0; tau < n_traj; ++tau) {
      sf += work[tau].f[i];
      sg += work[tau].g[i];
      overflowed += work[tau].overflow[i];
    }
    result.f.mean[i] = sf / static_cast<double>(n_traj);
    result.g.mean[i] = sg / static_cast<double>(n_traj);
    const double frac = static_cast<double>(overflowed) / n_traj;
    result.f.overflow_fraction_by_point[i] = frac;
    result.g.overflow_fraction_by_point[i] = frac;
    if (n_traj > 1) {
      double vfr = 0, vfi = 0, vgr = 0, vgi = 0;
      for (int tau = 0; tau < n_traj; ++tau) {
        const cplx df = work[tau].f[i] - result.f.mean[i];
        const cplx dg = work[tau].g[i] - result.g.mean[i];
        vfr += df.real() * df.real();
        vfi += df.imag() * df.imag();
        vgr += dg.real() * dg.real();
        vgi += dg.imag() * dg.imag();
      }
      const double norm = 1.0 / (static_cast<double>(n_traj) - 1.0);
      result.f.stderr_re[i] = std::sqrt(vfr * norm / n_traj);
      result.f.stderr_im[i] = std::sqrt(vfi * norm / n_traj);
      result.g.stderr_re[i] = std::sqrt(vgr * norm / n_traj);
      result.g.stderr_im[i] = std::sqrt(vgi * norm / n_traj);
    }
  }
  for (EnsembleEstimate* est : {&result.f, &result.g}) {
    est->overflow_fraction = 0.0;
    for (double frac : est->overflow_fraction_by_point)
      est->overflow_fraction = std::max(est->overflow_fraction, frac);
  }
  if (keep_records) {
    result.records.reserve(n_traj);
    for (auto& w : work) result.records.push_back(std::move(w.record));
  }
  return result;
}

PhotonsLost photons_lost(const ProtocolSpec& spec,
                         const DissipationParams& params, double t) {
  if (t < 0.0) throw std::invalid_argument("photons_lost: t must be >= 0");
  const int n_atoms = spec.spin.two_s;
  double exposure = 0.0;
  if (spec.model.kind == ModelSpec::Kind::KickedTop) {
    const int kicks = validated_kick_count(t);
    exposure = kicks * spec.model.kick_strength / (n_atoms * params.chi);
  } else {
    exposure = t;
  }
  const double rate = n_atoms * (params.gamma + 2.0 * params.mu);
  return PhotonsLost{rate * exposure, 2.0 * rate * exposure};
}

double dicke_multiplicity(int n_atoms, double total_spin) {
  const auto binom = [](int n, int k) -> double {
    if (k < 0 || k > n) return 0.0;
    double acc = 1.0;
    for (int i = 1; i <= k; ++i) acc = acc * (n - k + i) / i;
    return acc;
  };
  const double two_s = 2.0 * total_spin;
  if (n_atoms < 1 || total_spin < 0 ||
      std::abs(two_s - std::round(two_s)) > 1e-9)
    throw std::invalid_argument("dicke multiplicity: invalid arguments");
  const double half_diff = 0.5 * n_atoms - total_spin;
  if (std::abs(half_diff - std::round(half_diff)) > 1e-9)
    return 0.0;  // parity mismatch between N and S
  const int k = static_cast<int>(std::round(half_diff));
  return binom(n_atoms, k) - binom(n_atoms, k - 1);
}

}  // namespace otoc
