#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otafl/rng.hpp"
#include "otafl/types.hpp"

namespace otafl {

/// Power budgets and receiver noise for the analog channel. sigma2 holds one
/// receive-noise variance per cluster-head (one entry total for a
/// single-server run).
struct ChannelEnv {
  double uplink_power = 1.0;          // P1: client -> head budget
  double consensus_power = 1.0;       // P2: head -> head budget
  std::vector<double> sigma2;         // per-receiver noise variances
  std::uint64_t noise_seed = 0;
  double degenerate_cap = 1e12;       // precode factor used when all deltas vanish

  void validate() const;
};

/// How the consensus decode combines the local estimate with the neighbor sum.
/// PaperExact adds the full-magnitude neighbor sum; Normalized divides by
/// (1 + row sum) so the result is a convex combination with a fixed point.
enum class DecodeMode { Normalized, PaperExact };

/// How the precoding factor replaces the unobservable expectation: Genie uses
/// the realized max over transmitters, Bound the analytic drift bound
/// 4 E^2 (eta^t)^2 G^2.
enum class PrecodeMode { Genie, Bound };

/// Consensus-phase noise: one draw at the aggregate variance of the
/// effective-noise law, or one draw per incoming link.
enum class ConsensusNoiseMode { Direct, PerLink };

DecodeMode decode_mode_from_name(const std::string& name);
PrecodeMode precode_mode_from_name(const std::string& name);
ConsensusNoiseMode consensus_noise_mode_from_name(const std::string& name);

/// I.i.d. zero-mean Gaussian vector with the given variance, drawn from the
/// stream. Variance 0 yields the exact zero vector without consuming draws.
ParamVector sample_noise(int dim, double variance, Rng& stream);

struct PrecodeFactor {
  double value = 0.0;
  bool degenerate = false;  // all transmitted vectors were zero

  operator double() const { return value; }
};

/// p^t = P1 / max_k ||delta_k||^2 over the realized deltas. When every delta
/// is zero the factor is pinned at the configured cap: transmit signals stay
/// exactly zero and the decode divides by the cap instead of infinity.
PrecodeFactor uplink_precode_factor(std::span<const ParamVector> deltas, double uplink_power,
                                    double degenerate_cap = 1e12);

/// q^t = P2 / max_c ||theta_tilde_c||^2 over the realized head parameters.
PrecodeFactor consensus_precode_factor(std::span<const ParamVector> head_params,
                                       double consensus_power, double degenerate_cap = 1e12);

/// Analytic stand-in for the realized uplink max: P1 / (4 E^2 eta^2 G^2).
double bound_precode_factor(double uplink_power, int steps_per_round, double eta,
                            double gradient_bound);

/// x_k = sqrt(p) (theta_k - anchor)
ParamVector encode_client(const ParamVector& theta_k, const ParamVector& anchor, double p_t);

/// Elementwise sum of simultaneously transmitted signals plus receiver noise.
/// Reduction runs in list order; callers pass signals in ascending client id
/// for bit determinism.
ParamVector mac_superpose(std::span<const ParamVector> signals, const ParamVector& noise);

/// theta_tilde = y / (K_c sqrt(p)) + theta_prev. With zero noise this is the
/// exact in-cluster parameter average.
ParamVector decode_cluster(const ParamVector& y, int cluster_size, double p_t,
                           const ParamVector& theta_prev);

/// r_c = sum_j W(c,j) s_j + v_c. The row's self-weight is zero by the mixing
/// matrix invariant, so the local head's signal does not contribute.
ParamVector exchange_receive(std::span<const ParamVector> head_signals,
                             const Eigen::VectorXd& mixing_row, const ParamVector& noise);

/// kappa_c^2 = sum_j W(c,j) sigma_j^2: the aggregate consensus-noise variance.
double effective_noise_variance(const Eigen::VectorXd& mixing_row,
                                std::span<const double> sigma2);

/// theta_bar = theta_tilde + r / sqrt(q), optionally divided by
/// (1 + neighbor_weight_sum) in Normalized mode.
ParamVector decode_consensus(const ParamVector& theta_tilde, const ParamVector& r, double q_t,
                             DecodeMode mode, double neighbor_weight_sum);

/// sigma^2 = power / 10^(snr_db / 10)
double snr_to_variance(double power, double snr_db);

}  // namespace otafl
