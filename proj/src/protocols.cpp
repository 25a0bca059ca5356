#include "otoc/protocols.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "otoc/parallel.hpp"

namespace otoc {

namespace {

void require_valid_time(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("protocol time must be >= 0");
}

void require_valid_rotation(const Rotation& r, const char* name) {
  if (!std::isfinite(r.angle))
    throw std::invalid_argument(std::string(name) +
                                ": rotation angle must be finite");
}

DickeState apply(const CollectiveOps& ops, const Rotation& r,
                 const DickeState& state) {
  return rotate(ops, state, r.axis, r.angle);
}

// O^W_t |state> = U(-t) O^W U(t) |state> for a Hermitian generator.
DickeState heisenberg_apply(const CollectiveOps& ops, const ProtocolSpec& spec,
                            const HermitianObs& obs, double t,
                            const DickeState& state) {
  DickeState out =
      evolve_model(ops, spec.model, state, t, TimeDirection::Forward);
  const MatrixXcd m = (obs.axis == Axis::X)   ? ops.sx()
                      : (obs.axis == Axis::Y) ? ops.sy()
                                              : ops.sz();
  out.amps = (obs.scale * m) * out.amps;
  return evolve_model(ops, spec.model, out, t, TimeDirection::Backward);
}

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ControlledState controlled_branches(const CollectiveOps& ops,
                                    const ProtocolSpec& spec, double t) {
  require_valid_time(t);
  require_valid_rotation(spec.v, "V");
  require_valid_rotation(spec.w, "W");
  const DickeState psi = make_initial_state(ops, spec.initial);

  // branch1 carries the controlled-V of gate [1]; both branches then share
  // U(t), W, U(-t); branch0 receives the final controlled-V of gate [5].
  DickeState b1 = apply(ops, spec.v, psi);
  b1 = evolve_model(ops, spec.model, b1, t, TimeDirection::Forward);
  b1 = apply(ops, spec.w, b1);
  b1 = evolve_model(ops, spec.model, b1, t, TimeDirection::Backward);

  DickeState b0 = evolve_model(ops, spec.model, psi, t, TimeDirection::Forward);
  b0 = apply(ops, spec.w, b0);
  b0 = evolve_model(ops, spec.model, b0, t, TimeDirection::Backward);
  b0 = apply(ops, spec.v, b0);

  return ControlledState{std::move(b0), std::move(b1)};
}

cplx interferometric_f(const CollectiveOps& ops, const ProtocolSpec& spec,
                       double t) {
  return controlled_branches(ops, spec, t).control_xy();
}

namespace {

// W_t^dag V^dag W_t V |psi> applied gate by gate.
DickeState oto_string_state(const CollectiveOps& ops, const ProtocolSpec& spec,
                            double t) {
  require_valid_time(t);
  require_valid_rotation(spec.v, "V");
  require_valid_rotation(spec.w, "W");
  DickeState s = make_initial_state(ops, spec.initial);
  s = apply(ops, spec.v, s);
  s = evolve_model(ops, spec.model, s, t, TimeDirection::Forward);
  s = apply(ops, spec.w, s);
  s = evolve_model(ops, spec.model, s, t, TimeDirection::Backward);
  s = apply(ops, spec.v.inverse(), s);
  s = evolve_model(ops, spec.model, s, t, TimeDirection::Forward);
  s = apply(ops, spec.w.inverse(), s);
  s = evolve_model(ops, spec.model, s, t, TimeDirection::Backward);
  return s;
}

}  // namespace

cplx direct_oto_f(const CollectiveOps& ops, const ProtocolSpec& spec,
                  double t) {
  const DickeState psi = make_initial_state(ops, spec.initial);
  return overlap(psi, oto_string_state(ops, spec, t));
}

double distinguishability(const CollectiveOps& ops, const ProtocolSpec& spec,
                          double t) {
  const DickeState psi = make_initial_state(ops, spec.initial);
  return std::norm(overlap(psi, oto_string_state(ops, spec, t)));
}

cplx time_ordered_g(const CollectiveOps& ops, const ProtocolSpec& spec,
                    double t) {
  require_valid_time(t);
  require_valid_rotation(spec.v, "V");
  const DickeState psi = make_initial_state(ops, spec.initial);

  DickeState b1 = apply(ops, spec.v, psi);
  b1 = evolve_model(ops, spec.model, b1, t, TimeDirection::Forward);

  DickeState b0 = evolve_model(ops, spec.model, psi, t, TimeDirection::Forward);
  b0 = apply(ops, spec.v, b0);

  return overlap(b0, b1);
}

cplx forward_only_time_ordered(const CollectiveOps& ops,
                               const ProtocolSpec& spec,
                               std::span<const Rotation> v_ops,
                               std::span<const Rotation> w_ops,
                               std::span<const double> op_times) {
  if (v_ops.size() != w_ops.size() || v_ops.size() != op_times.size())
    throw std::invalid_argument(
        "forward-only protocol: operator and time lists must share length");
  if (op_times.empty())
    throw std::invalid_argument("forward-only protocol: empty sequence");
  double prev = 0.0;
  for (double t : op_times) {
    if (t < prev - 1e-12)
      throw std::invalid_argument(
          "forward-only protocol: times must be non-decreasing");
    prev = t;
  }

  const DickeState psi = make_initial_state(ops, spec.initial);
  DickeState b0 = psi;  // W string
  DickeState b1 = psi;  // V string
  double t_now = 0.0;
  for (std::size_t i = 0; i < op_times.size(); ++i) {
    const double dt = op_times[i] - t_now;
    if (dt > 0.0) {
      b0 = evolve_model(ops, spec.model, b0, dt, TimeDirection::Forward);
      b1 = evolve_model(ops, spec.model, b1, dt, TimeDirection::Forward);
      t_now = op_times[i];
    }
    b0 = apply(ops, w_ops[i], b0);
    b1 = apply(ops, v_ops[i], b1);
  }
  // <(V string)^dag (W string)>; measuring X_C on the controlled sequence
  // yields its real part.
  return overlap(b1, b0);
}

HermitianOtoResult hermitian_oto(const CollectiveOps& ops,
                                 const ProtocolSpec& spec, HermitianObs ov,
                                 HermitianObs ow, double t, double eps) {
  require_valid_time(t);
  const DickeState psi = make_initial_state(ops, spec.initial);

  const MatrixXcd mv = (ov.axis == Axis::X)   ? ops.sx()
                       : (ov.axis == Axis::Y) ? ops.sy()
                                              : ops.sz();

  DickeState v_psi = psi;
  v_psi.amps = (ov.scale * mv) * psi.amps;
  // u = O^W_t O^V |psi>, v = O^V O^W_t |psi>
  DickeState u = heisenberg_apply(ops, spec, ow, t, v_psi);
  DickeState w_psi = heisenberg_apply(ops, spec, ow, t, psi);
  DickeState v = w_psi;
  v.amps = (ov.scale * mv) * w_psi.amps;

  const double denom = u.norm2() + v.norm2();
  if (!(denom > 1e-300))
    throw std::invalid_argument(
        "hermitian OTO: both correlator norms vanish (zero denominator)");
  const double numer = 2.0 * overlap(u, v).real();
  HermitianOtoResult result;
  result.ratio = numer / denom;
  result.postselect_probability = eps * eps * eps * denom / 2.0;
  return result;
}

CorrelatorSeries correlator_series(const CollectiveOps& ops,
                                   const ProtocolSpec& spec,
                                   const std::vector<double>& times,
                                   const SeriesOptions& options) {
  CorrelatorSeries series;
  series.times = times;
  series.f.resize(times.size());
  if (options.with_g) series.g.resize(times.size());
  std::vector<double> oracle_dev(options.with_direct_check ? times.size() : 0,
                                 0.0);

  parallel_for(static_cast<int>(times.size()), options.threads, [&](int i) {
    const double t = times[i];
    series.f[i] = interferometric_f(ops, spec, t);
    if (options.with_direct_check)
      oracle_dev[i] = std::abs(series.f[i] - direct_oto_f(ops, spec, t));
    if (options.with_g) series.g[i] = time_ordered_g(ops, spec, t);
  });

  if (options.with_direct_check) {
    double max_dev = 0.0;
    for (double d : oracle_dev) max_dev = std::max(max_dev, d);
    series.metadata["max_f_oracle_dev"] = format_double(max_dev);
  }
  check_unitary_bounds(series);
  return series;
}

void check_unitary_bounds(const CorrelatorSeries& series) {
  constexpr double bound = 1.0 + 1e-9;
  for (const cplx& v : series.f)
    if (std::abs(v) > bound)
      throw std::runtime_error("unitarity bound violated: |F| > 1 + 1e-9");
  for (const cplx& v : series.g)
    if (std::abs(v) > bound)
      throw std::runtime_error("unitarity bound violated: |G| > 1 + 1e-9");
}

}  // namespace otoc
