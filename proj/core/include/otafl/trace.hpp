#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "otafl/types.hpp"

namespace otafl {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Metrics logged at t = 0, every aggregation slot, and t = T.
struct MetricsRow {
  long t = 0;
  std::vector<double> dist_to_opt;  // per head ||theta_tilde_c - theta*||^2; empty when
                                    // theta* is unknown
  double global_loss = kMissing;
  double test_accuracy = kMissing;
  long long channel_uses = 0;       // cumulative; non-decreasing in t
  double p_factor = kMissing;       // realized p^t at this slot
  double q_factor = kMissing;       // realized q^t at this slot
  double max_uplink_energy = kMissing;   // max_k ||x_k||^2
  double max_head_energy = kMissing;     // max_c ||s_c||^2
};

/// One protocol execution: the per-slot metric rows plus the final per-head
/// consensus parameters. For client-level protocols (DSGD, local-only) the
/// single "head" aggregates the client fleet.
struct RunTrace {
  std::string protocol;
  std::uint64_t seed = 0;
  int heads = 1;
  std::vector<MetricsRow> rows;
  std::vector<ParamVector> final_params;
  long power_coupling_violations = 0;  // slots where p^t > q^{t-E} (logged, genie mode)
};

}  // namespace otafl
