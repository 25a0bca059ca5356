#pragma once

#include <vector>

#include "otoc/open_system.hpp"

namespace otoc {

struct OracleSeries {
  std::vector<double> times;
  std::vector<cplx> f;
  std::vector<cplx> g;
  // max |Tr rho - 1| observed across all readout moments
  double max_trace_deviation = 0.0;
};

// Exact Lindblad evolution of the two-branch extended system (system x
// control qubit) in the full 2^N-dimensional product space, walking the
// same interferometric protocol as the trajectory engine.  Twisting
// segments use Strang splitting between the exactly-propagated
// twisting+cavity superoperator (diagonal in the Sx product basis) and
// the exactly-propagated single-atom depolarizing channels; substeps
// control the splitting error and halving them must change the result
// by less than 1e-8 for a converged run.  Restricted to N <= 8 and
// z-axis V, W.
OracleSeries master_equation_oracle(const ProtocolSpec& spec,
                                    const DissipationParams& params,
                                    const std::vector<double>& times,
                                    int substeps_per_segment = 64);

// Same protocol solved entirely inside the symmetric Dicke sector.
// Valid only for mu = 0 (cavity decay preserves the sector); segment
// propagation is exact, so substeps are irrelevant here.
OracleSeries master_equation_oracle_dicke(const ProtocolSpec& spec,
                                          const DissipationParams& params,
                                          const std::vector<double>& times);

// Symmetric-sector state expanded over the 2^N product basis (bit = 1
// marks a down spin).
VectorXcd dicke_to_product(const DickeState& state);

}  // namespace otoc
