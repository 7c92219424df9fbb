#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otafl/data.hpp"
#include "otafl/model.hpp"
#include "otafl/topology.hpp"
#include "otafl/trace.hpp"
#include "otafl/types.hpp"

namespace otafl {

/// Everything the convergence-rate bound consumes.
struct TheoremInputs {
  double smoothness = 0.0;        // L
  double strong_convexity = 0.0;  // mu
  double gradient_bound = 0.0;    // G
  double heterogeneity = 0.0;     // Gamma
  std::vector<double> alpha2;     // per-client stochastic-gradient variance alpha_k^2
  double uplink_power = 0.0;      // P1
  double consensus_power = 0.0;   // P2
  int param_dim = 0;              // d
  int steps_per_round = 0;        // E
  ClusterLayout layout;
  MixingMatrix mixing;
  std::vector<double> sigma2;     // per-head noise variances
};

/// Per-cluster-head pieces of the rate bound.
struct HeadConstants {
  double q1 = 0.0;
  double a_term = 0.0;
  double kappa2 = 0.0;      // sum_j W(c,j) sigma_j^2
  double alpha2_sum = 0.0;  // sum over the head's clients
  int cluster_size = 0;
};

struct TheoremConstants {
  double gamma = 0.0;  // max(E, 12 L / mu)
  double smoothness = 0.0;
  double strong_convexity = 0.0;
  double gradient_bound = 0.0;
  double heterogeneity = 0.0;
  double uplink_power = 0.0;
  double consensus_power = 0.0;
  int param_dim = 0;
  int steps_per_round = 0;
  std::vector<HeadConstants> heads;

  /// eta^t = 2 / (mu (gamma + t))
  double eta_at(int t) const;

  /// Rate-bound curve 2 max(4 Q1, mu^2 gamma delta0) / (mu^2 (t + gamma - 1)).
  double bound_at(int t, int head, double delta0) const;

  /// Head with the largest Q1 (the reported worst case).
  int worst_head() const;

  std::string report() const;
};

/// Evaluates the printed rate-bound constants per head, with the slot
/// indicator relaxed to its always-on value.
TheoremConstants theorem_constants(const TheoremInputs& inputs);

struct GradientBoundEstimate {
  double gradient_bound = 0.0;   // safety_factor * max observed stochastic-grad norm
  double max_observed = 0.0;
  std::vector<double> alpha2;    // per-client variance around the full-batch gradient
};

/// Seeded warm-up: each client walks one epoch of minibatch SGD from theta0
/// recording stochastic gradient norms; alpha_k^2 is the empirical variance of
/// the client's stochastic gradient around its full-batch gradient at theta0.
GradientBoundEstimate estimate_gradient_bound(const ModelSpec& spec,
                                              std::span<const ClientShard> shards,
                                              const ParamVector& theta0, int batch_size,
                                              std::uint64_t seed, double safety_factor = 1.5);

/// Least-squares slope of log(delta^t) against log(t) over rows with
/// t in [t_min, t_max], averaged across heads. Rejects non-positive deltas.
double fit_convergence_slope(const RunTrace& trace, double t_min, double t_max);

struct BoundCheckRow {
  long t = 0;
  double mean_delta = 0.0;
  double bound = 0.0;
  bool violated = false;
};

struct BoundCheckReport {
  int checked = 0;
  int violations = 0;
  std::vector<BoundCheckRow> rows;  // worst head only, for printing
};

/// Seed-averages delta^t across traces and compares each logged slot against
/// the per-head bound curve (delta0 realized from the t = 0 rows).
BoundCheckReport check_bound_dominance(std::span<const RunTrace> traces,
                                       const TheoremConstants& constants);

}  // namespace otafl
