#include "otafl/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace otafl {

void ChannelEnv::validate() const {
  if (uplink_power <= 0.0 || consensus_power <= 0.0) {
    throw std::invalid_argument("channel: power budgets must be > 0");
  }
  for (double s : sigma2) {
    if (s < 0.0) throw std::invalid_argument("channel: noise variances must be >= 0");
  }
  if (degenerate_cap <= 0.0) {
    throw std::invalid_argument("channel: degenerate_cap must be > 0");
  }
}

DecodeMode decode_mode_from_name(const std::string& name) {
  if (name == "normalized") return DecodeMode::Normalized;
  if (name == "paper-exact") return DecodeMode::PaperExact;
  throw std::invalid_argument("unknown decode mode: " + name);
}

PrecodeMode precode_mode_from_name(const std::string& name) {
  if (name == "genie") return PrecodeMode::Genie;
  if (name == "bound") return PrecodeMode::Bound;
  throw std::invalid_argument("unknown precode mode: " + name);
}

ConsensusNoiseMode consensus_noise_mode_from_name(const std::string& name) {
  if (name == "direct") return ConsensusNoiseMode::Direct;
  if (name == "per-link") return ConsensusNoiseMode::PerLink;
  throw std::invalid_argument("unknown consensus noise mode: " + name);
}

ParamVector sample_noise(int dim, double variance, Rng& stream) {
  if (variance < 0.0) {
    throw std::invalid_argument("sample_noise: variance must be >= 0");
  }
  if (variance == 0.0) return ParamVector::Zero(dim);
  const double std_dev = std::sqrt(variance);
  ParamVector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = std_dev * stream.gaussian();
  return v;
}

namespace {

PrecodeFactor factor_from_max(double power, double max_sq, double cap) {
  if (power <= 0.0) throw std::invalid_argument("precode: power budget must be > 0");
  if (max_sq == 0.0) return {cap, true};
  return {power / max_sq, false};
}

}  // namespace

PrecodeFactor uplink_precode_factor(std::span<const ParamVector> deltas, double uplink_power,
                                    double degenerate_cap) {
  if (deltas.empty()) throw std::invalid_argument("uplink_precode_factor: no deltas");
  double max_sq = 0.0;
  for (const auto& d : deltas) max_sq = std::max(max_sq, d.squaredNorm());
  return factor_from_max(uplink_power, max_sq, degenerate_cap);
}

PrecodeFactor consensus_precode_factor(std::span<const ParamVector> head_params,
                                       double consensus_power, double degenerate_cap) {
  if (head_params.empty()) throw std::invalid_argument("consensus_precode_factor: no heads");
  double max_sq = 0.0;
  for (const auto& p : head_params) max_sq = std::max(max_sq, p.squaredNorm());
  return factor_from_max(consensus_power, max_sq, degenerate_cap);
}

double bound_precode_factor(double uplink_power, int steps_per_round, double eta,
                            double gradient_bound) {
  if (steps_per_round < 1 || eta <= 0.0 || gradient_bound <= 0.0) {
    throw std::invalid_argument("bound_precode_factor: need E >= 1, eta > 0, G > 0");
  }
  const double drift = 2.0 * steps_per_round * eta * gradient_bound;
  return uplink_power / (drift * drift);
}

ParamVector encode_client(const ParamVector& theta_k, const ParamVector& anchor, double p_t) {
  if (p_t <= 0.0) throw std::invalid_argument("encode_client: p_t must be > 0");
  if (theta_k.size() != anchor.size()) {
    throw std::invalid_argument("encode_client: dimension mismatch");
  }
  return std::sqrt(p_t) * (theta_k - anchor);
}

ParamVector mac_superpose(std::span<const ParamVector> signals, const ParamVector& noise) {
  if (signals.empty()) throw std::invalid_argument("mac_superpose: no signals");
  ParamVector y = noise;
  for (const auto& s : signals) {
    if (s.size() != y.size()) {
      throw std::invalid_argument("mac_superpose: dimension mismatch");
    }
    y += s;
  }
  return y;
}

ParamVector decode_cluster(const ParamVector& y, int cluster_size, double p_t,
                           const ParamVector& theta_prev) {
  if (cluster_size < 1) throw std::invalid_argument("decode_cluster: cluster_size must be >= 1");
  if (p_t <= 0.0) throw std::invalid_argument("decode_cluster: p_t must be > 0");
  return y / (cluster_size * std::sqrt(p_t)) + theta_prev;
}

ParamVector exchange_receive(std::span<const ParamVector> head_signals,
                             const Eigen::VectorXd& mixing_row, const ParamVector& noise) {
  if (static_cast<Eigen::Index>(head_signals.size()) != mixing_row.size()) {
    throw std::invalid_argument("exchange_receive: one weight per head required");
  }
  ParamVector r = noise;
  for (std::size_t j = 0; j < head_signals.size(); ++j) {
    if (head_signals[j].size() != r.size()) {
      throw std::invalid_argument("exchange_receive: dimension mismatch");
    }
    const double w = mixing_row[static_cast<Eigen::Index>(j)];
    if (w != 0.0) r.noalias() += w * head_signals[j];
  }
  return r;
}

double effective_noise_variance(const Eigen::VectorXd& mixing_row,
                                std::span<const double> sigma2) {
  if (static_cast<std::size_t>(mixing_row.size()) != sigma2.size()) {
    throw std::invalid_argument("effective_noise_variance: length mismatch");
  }
  double kappa2 = 0.0;
  for (Eigen::Index j = 0; j < mixing_row.size(); ++j) {
    kappa2 += mixing_row[j] * sigma2[static_cast<std::size_t>(j)];
  }
  return kappa2;
}

ParamVector decode_consensus(const ParamVector& theta_tilde, const ParamVector& r, double q_t,
                             DecodeMode mode, double neighbor_weight_sum) {
  if (q_t <= 0.0) throw std::invalid_argument("decode_consensus: q_t must be > 0");
  ParamVector out = theta_tilde + r / std::sqrt(q_t);
  if (mode == DecodeMode::Normalized) {
    out /= 1.0 + neighbor_weight_sum;
  }
  return out;
}

double snr_to_variance(double power, double snr_db) {
  if (power <= 0.0) throw std::invalid_argument("snr_to_variance: power must be > 0");
  return power / std::pow(10.0, snr_db / 10.0);
}

}  // namespace otafl
