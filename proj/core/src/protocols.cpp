#include "otafl/protocols.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "otafl/rng.hpp"

namespace otafl {

RoundSchedule schedule_aggregations(int total_steps, int steps_per_round) {
  if (steps_per_round < 1 || total_steps < steps_per_round) {
    throw std::invalid_argument("schedule_aggregations: need T >= E >= 1");
  }
  RoundSchedule s;
  s.total_steps = total_steps;
  s.steps_per_round = steps_per_round;
  for (int t = steps_per_round; t <= total_steps; t += steps_per_round) {
    s.slots.push_back(t);
  }
  return s;
}

std::string protocol_name(Protocol protocol) {
  switch (protocol) {
    case Protocol::Cwfl: return "cwfl";
    case Protocol::CwflProx: return "cwfl-prox";
    case Protocol::Cotaf: return "cotaf";
    case Protocol::CotafProx: return "cotaf-prox";
    case Protocol::Dsgd: return "dsgd";
    case Protocol::LocalOnly: return "local-only";
  }
  return "?";
}

Protocol protocol_from_name(const std::string& name) {
  if (name == "cwfl") return Protocol::Cwfl;
  if (name == "cwfl-prox") return Protocol::CwflProx;
  if (name == "cotaf") return Protocol::Cotaf;
  if (name == "cotaf-prox") return Protocol::CotafProx;
  if (name == "dsgd") return Protocol::Dsgd;
  if (name == "local-only") return Protocol::LocalOnly;
  throw std::invalid_argument("unknown protocol: " + name);
}

bool protocol_is_clustered(Protocol protocol) {
  return protocol == Protocol::Cwfl || protocol == Protocol::CwflProx;
}

bool protocol_is_prox(Protocol protocol) {
  return protocol == Protocol::CwflProx || protocol == Protocol::CotafProx;
}

double LrSchedule::at(int t) const {
  switch (kind) {
    case LrScheduleKind::Constant:
      return eta;
    case LrScheduleKind::Theorem:
      if (mu <= 0.0 || gamma <= 0.0) {
        throw std::invalid_argument("lr schedule: theorem schedule needs mu > 0 and gamma > 0");
      }
      return 2.0 / (mu * (gamma + t));
  }
  return eta;
}

long long channel_uses_per_slot(Protocol protocol, int clients, int clusters) {
  if (clients < 1) throw std::invalid_argument("channel_uses_per_slot: clients must be >= 1");
  switch (protocol) {
    case Protocol::Cwfl:
    case Protocol::CwflProx:
      if (clusters < 1) {
        throw std::invalid_argument("channel_uses_per_slot: clusters must be >= 1");
      }
      // C uplink aggregations + C(C-1) pairwise head exchanges.
      return static_cast<long long>(clusters) * clusters;
    case Protocol::Cotaf:
    case Protocol::CotafProx:
      return 1;
    case Protocol::Dsgd:
      return static_cast<long long>(clients) * (clients - 1);
    case Protocol::LocalOnly:
      return 0;
  }
  throw std::invalid_argument("channel_uses_per_slot: unknown protocol");
}

namespace {

// Noise substream tags; combined with (round, receiver [, sender]).
constexpr std::uint64_t kPhaseUplink = 1;
constexpr std::uint64_t kPhaseConsensus = 2;
constexpr std::uint64_t kPhaseDsgd = 3;

Rng noise_stream(const ChannelEnv& env, std::uint64_t phase, std::uint64_t round,
                 std::uint64_t receiver, std::uint64_t sender = 0) {
  Rng root(env.noise_seed);
  return root.substream(
      hash_combine(hash_combine(hash_combine(phase, round), receiver), sender));
}

ParamVector initial_params(const ProtocolConfig& cfg) {
  Rng rng(cfg.init_seed, 0xA11);
  const int d = cfg.model.param_dim();
  ParamVector theta0(d);
  for (int i = 0; i < d; ++i) theta0[i] = 0.1 * rng.gaussian();  // N(0, 0.01 I)
  return theta0;
}

// Without-replacement minibatch scheduler: one shuffled pass per epoch,
// reshuffled when exhausted.
class BatchSampler {
 public:
  BatchSampler(std::size_t data_size, int batch_size, Rng rng)
      : rng_(rng), batch_(std::min<std::size_t>(static_cast<std::size_t>(batch_size), data_size)) {
    order_.resize(data_size);
    std::iota(order_.begin(), order_.end(), 0);
    rng_.shuffle(order_);
  }

  std::span<const int> next() {
    if (cursor_ >= order_.size()) {
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    const std::size_t take = std::min(batch_, order_.size() - cursor_);
    std::span<const int> out(order_.data() + cursor_, take);
    cursor_ += take;
    return out;
  }

 private:
  Rng rng_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  std::size_t batch_ = 1;
};

std::vector<BatchSampler> make_samplers(const ProtocolConfig& cfg,
                                        std::span<const ClientShard> shards) {
  Rng root(cfg.order_seed);
  std::vector<BatchSampler> samplers;
  samplers.reserve(shards.size());
  for (std::size_t k = 0; k < shards.size(); ++k) {
    samplers.emplace_back(shards[k].size(), cfg.batch_size, root.substream(k));
  }
  return samplers;
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

void common_validate(const ProtocolConfig& cfg, std::span<const ClientShard> shards) {
  cfg.model.validate();
  cfg.channel.validate();
  require(!shards.empty(), "run: no client shards");
  require(cfg.batch_size >= 1, "run: batch_size must be >= 1");
  for (const auto& shard : shards) {
    require(shard.size() >= 1, "run: every shard needs at least one instance");
  }
  if (protocol_is_prox(cfg.protocol)) {
    require(cfg.lambda_p > 0.0, "run: prox protocols require lambda_p > 0");
  }
  if (cfg.precode == PrecodeMode::Bound) {
    require(cfg.gradient_bound > 0.0, "run: bound precoding requires gradient_bound > 0");
  }
}

void check_finite(const ParamVector& v, Protocol protocol, int t, const char* where) {
  if (!all_finite(v)) {
    throw std::runtime_error("run " + protocol_name(protocol) + ": non-finite parameters at t=" +
                             std::to_string(t) + " (" + where + ")");
  }
}

double mean_distance_sq(std::span<const ParamVector> params, const ParamVector& target) {
  double sum = 0.0;
  for (const auto& p : params) sum += (p - target).squaredNorm();
  return sum / static_cast<double>(params.size());
}

// Loss / accuracy / distance columns averaged over the given parameter set
// (cluster-heads, or the client fleet for flat protocols).
MetricsRow eval_row(const ProtocolConfig& cfg, std::span<const ClientShard> shards,
                    const EvalContext& eval, long t, std::span<const ParamVector> estimates,
                    std::span<const ParamVector> models, bool per_head_distance) {
  MetricsRow row;
  row.t = t;
  if (eval.theta_star != nullptr) {
    if (per_head_distance) {
      row.dist_to_opt.reserve(estimates.size());
      for (const auto& est : estimates) {
        row.dist_to_opt.push_back((est - *eval.theta_star).squaredNorm());
      }
    } else {
      row.dist_to_opt.push_back(mean_distance_sq(estimates, *eval.theta_star));
    }
  }
  double loss = 0.0;
  for (const auto& m : models) loss += global_objective(cfg.model, m, shards);
  row.global_loss = loss / static_cast<double>(models.size());
  if (eval.test_set != nullptr && cfg.model.is_classifier()) {
    double acc = 0.0;
    for (const auto& m : models) acc += accuracy(cfg.model, m, *eval.test_set);
    row.test_accuracy = acc / static_cast<double>(models.size());
  }
  return row;
}

// Shared skeleton for CWFL (with consensus phase) and COTAF (single cluster,
// no consensus). Executes Algorithm-1 rounds: E local SGD steps, then OTA
// uplink aggregation per cluster, optional head exchange, and broadcast.
RunTrace run_clustered(const ProtocolConfig& cfg, std::span<const ClientShard> shards,
                       const EvalContext& eval, bool with_consensus) {
  common_validate(cfg, shards);
  const ClusterLayout layout =
      with_consensus ? cfg.layout : ClusterLayout::single(static_cast<int>(shards.size()));
  layout.validate();
  require(layout.clients() == static_cast<int>(shards.size()),
          "run: layout does not cover the shard list");
  const int num_clusters = layout.clusters();
  require(static_cast<int>(cfg.channel.sigma2.size()) == num_clusters,
          "run: need one noise variance per receiver");

  MixingMatrix mixing = cfg.mixing;
  if (with_consensus) {
    if (mixing.size() == 0) mixing = mixing_uniform_complete(num_clusters);
    require(mixing.size() == num_clusters, "run: mixing matrix size != cluster count");
    if (!validate_mixing(mixing.weights).ok()) {
      throw std::invalid_argument("run: invalid mixing matrix: " +
                                  validate_mixing(mixing.weights).summary());
    }
  }

  const RoundSchedule schedule = schedule_aggregations(cfg.total_steps, cfg.steps_per_round);
  const int d = cfg.model.param_dim();
  const ParamVector theta0 = initial_params(cfg);

  std::vector<ParamVector> client_params(shards.size(), theta0);
  std::vector<ParamVector> anchors(static_cast<std::size_t>(num_clusters), theta0);
  std::vector<ProxConfig> prox(static_cast<std::size_t>(num_clusters));
  const bool use_prox = protocol_is_prox(cfg.protocol);
  for (auto& p : prox) p = ProxConfig{cfg.lambda_p, theta0};

  auto samplers = make_samplers(cfg, shards);

  RunTrace trace;
  trace.protocol = protocol_name(cfg.protocol);
  trace.seed = cfg.init_seed;
  trace.heads = num_clusters;

  // t = 0 row: the shared start counts as every head's estimate.
  trace.rows.push_back(eval_row(cfg, shards, eval, 0, anchors, anchors, true));

  std::vector<ParamVector> deltas(shards.size());
  std::vector<ParamVector> head_estimates(static_cast<std::size_t>(num_clusters));
  std::vector<ParamVector> head_consensus(static_cast<std::size_t>(num_clusters));
  std::vector<ParamVector> signals;
  long long uses = 0;
  int round = 0;
  double q_prev = kMissing;

  for (int t = 1; t <= cfg.total_steps; ++t) {
    const double eta = cfg.lr.at(t - 1);
    for (std::size_t k = 0; k < shards.size(); ++k) {
      const auto batch = samplers[k].next();
      const ProxConfig* pk =
          use_prox ? &prox[static_cast<std::size_t>(layout.assignment[k])] : nullptr;
      const ParamVector grad = local_gradient(cfg.model, client_params[k], shards[k], batch, pk);
      client_params[k] = sgd_step(client_params[k], grad, eta);
      check_finite(client_params[k], cfg.protocol, t, "local step");
    }
    if (!schedule.is_slot(t)) continue;
    ++round;

    // Phase 1: OTA uplink, one channel use per cluster. A single p^t serves
    // every cluster: the realized max runs over all clients (genie view).
    for (std::size_t k = 0; k < shards.size(); ++k) {
      deltas[k] = client_params[k] - anchors[static_cast<std::size_t>(layout.assignment[k])];
    }
    PrecodeFactor p;
    if (cfg.precode == PrecodeMode::Genie) {
      p = uplink_precode_factor(deltas, cfg.channel.uplink_power, cfg.channel.degenerate_cap);
    } else {
      p = PrecodeFactor{bound_precode_factor(cfg.channel.uplink_power, cfg.steps_per_round, eta,
                                             cfg.gradient_bound),
                        false};
    }

    double max_uplink_energy = 0.0;
    for (int c = 0; c < num_clusters; ++c) {
      const auto& members = layout.members[static_cast<std::size_t>(c)];
      signals.clear();
      for (int k : members) {
        signals.push_back(encode_client(client_params[static_cast<std::size_t>(k)],
                                        anchors[static_cast<std::size_t>(c)], p));
        max_uplink_energy = std::max(max_uplink_energy, signals.back().squaredNorm());
      }
      Rng stream = noise_stream(cfg.channel, kPhaseUplink, static_cast<std::uint64_t>(round),
                                static_cast<std::uint64_t>(c));
      const ParamVector w =
          sample_noise(d, cfg.channel.sigma2[static_cast<std::size_t>(c)], stream);
      const ParamVector y = mac_superpose(signals, w);
      head_estimates[static_cast<std::size_t>(c)] = decode_cluster(
          y, static_cast<int>(members.size()), p, anchors[static_cast<std::size_t>(c)]);
      check_finite(head_estimates[static_cast<std::size_t>(c)], cfg.protocol, t, "uplink decode");
    }

    // Phase 2: decentralised head exchange, C-1 channel uses per head.
    double q_value = kMissing;
    double max_head_energy = kMissing;
    if (with_consensus) {
      const PrecodeFactor q = consensus_precode_factor(
          head_estimates, cfg.channel.consensus_power, cfg.channel.degenerate_cap);
      q_value = q;
      const double sqrt_q = std::sqrt(q.value);
      std::vector<ParamVector> head_signals(static_cast<std::size_t>(num_clusters));
      max_head_energy = 0.0;
      for (int c = 0; c < num_clusters; ++c) {
        head_signals[static_cast<std::size_t>(c)] =
            sqrt_q * head_estimates[static_cast<std::size_t>(c)];
        max_head_energy =
            std::max(max_head_energy, head_signals[static_cast<std::size_t>(c)].squaredNorm());
      }
      // Lemma-3 power coupling p^t <= q^{t-E}: a hypothesis of the analysis,
      // enforced under bound precoding, only counted under genie precoding.
      if (!std::isnan(q_prev) && p.value > q_prev) {
        if (cfg.precode == PrecodeMode::Bound) {
          throw std::runtime_error("run " + protocol_name(cfg.protocol) +
                                   ": power coupling p^t <= q^{t-E} violated at t=" +
                                   std::to_string(t));
        }
        ++trace.power_coupling_violations;
      }
      q_prev = q.value;

      for (int c = 0; c < num_clusters; ++c) {
        ParamVector v;
        if (cfg.consensus_noise == ConsensusNoiseMode::Direct) {
          const double kappa2 = effective_noise_variance(mixing.weights.row(c).transpose(),
                                                         cfg.channel.sigma2);
          Rng stream = noise_stream(cfg.channel, kPhaseConsensus,
                                    static_cast<std::uint64_t>(round),
                                    static_cast<std::uint64_t>(c));
          v = sample_noise(d, kappa2, stream);
        } else {
          // Per-link decomposition of the same law: sum_j sqrt(W(c,j)) n_j
          // with n_j ~ N(0, sigma_j^2 I) has variance sum_j W(c,j) sigma_j^2.
          v = ParamVector::Zero(d);
          for (int j = 0; j < num_clusters; ++j) {
            const double w_cj = mixing.weights(c, j);
            if (w_cj == 0.0) continue;
            Rng stream = noise_stream(cfg.channel, kPhaseConsensus,
                                      static_cast<std::uint64_t>(round),
                                      static_cast<std::uint64_t>(c),
                                      static_cast<std::uint64_t>(j) + 1);
            v += std::sqrt(w_cj) *
                 sample_noise(d, cfg.channel.sigma2[static_cast<std::size_t>(j)], stream);
          }
        }
        const ParamVector r =
            exchange_receive(head_signals, mixing.weights.row(c).transpose(), v);
        head_consensus[static_cast<std::size_t>(c)] = decode_consensus(
            head_estimates[static_cast<std::size_t>(c)], r, q, cfg.decode, mixing.row_sum(c));
        check_finite(head_consensus[static_cast<std::size_t>(c)], cfg.protocol, t,
                     "consensus decode");
      }
    } else {
      head_consensus = head_estimates;
    }

    // Phase 3: error-free broadcast; the consensus update becomes both the
    // cluster model and the next round's encode/decode anchor.
    std::vector<ParamVector> anchors_used;
    if (cfg.observer) anchors_used = anchors;
    for (int c = 0; c < num_clusters; ++c) {
      for (int k : layout.members[static_cast<std::size_t>(c)]) {
        client_params[static_cast<std::size_t>(k)] = head_consensus[static_cast<std::size_t>(c)];
      }
      anchors[static_cast<std::size_t>(c)] = head_consensus[static_cast<std::size_t>(c)];
      if (use_prox) prox[static_cast<std::size_t>(c)].anchor = anchors[static_cast<std::size_t>(c)];
    }

    uses += channel_uses_per_slot(cfg.protocol, layout.clients(), num_clusters);
    MetricsRow row = eval_row(cfg, shards, eval, t, head_estimates, head_consensus, true);
    row.channel_uses = uses;
    row.p_factor = p.value;
    row.q_factor = q_value;
    row.max_uplink_energy = max_uplink_energy;
    row.max_head_energy = max_head_energy;
    trace.rows.push_back(std::move(row));

    if (cfg.observer) {
      cfg.observer(SlotObservation{t, round, client_params, head_estimates, head_consensus,
                                   anchors_used, p.value, q_value});
    }
  }

  if (trace.rows.back().t != cfg.total_steps) {
    // Trailing partial round: log the virtual per-cluster averages.
    for (int c = 0; c < num_clusters; ++c) {
      ParamVector mean = ParamVector::Zero(d);
      for (int k : layout.members[static_cast<std::size_t>(c)]) {
        mean += client_params[static_cast<std::size_t>(k)];
      }
      head_estimates[static_cast<std::size_t>(c)] = mean / layout.cluster_size(c);
    }
    MetricsRow row =
        eval_row(cfg, shards, eval, cfg.total_steps, head_estimates, head_estimates, true);
    row.channel_uses = uses;
    trace.rows.push_back(std::move(row));
  }

  trace.final_params = anchors;
  return trace;
}

// Flat protocols: DSGD (noisy gossip over orthogonal links) and local-only.
RunTrace run_flat(const ProtocolConfig& cfg, std::span<const ClientShard> shards,
                  const EvalContext& eval) {
  common_validate(cfg, shards);
  require(!cfg.channel.sigma2.empty() || cfg.protocol == Protocol::LocalOnly,
          "run: dsgd needs a link noise variance");
  const RoundSchedule schedule = schedule_aggregations(cfg.total_steps, cfg.steps_per_round);
  const int d = cfg.model.param_dim();
  const std::size_t clients = shards.size();
  const ParamVector theta0 = initial_params(cfg);
  std::vector<ParamVector> client_params(clients, theta0);
  auto samplers = make_samplers(cfg, shards);
  const bool mix = cfg.protocol == Protocol::Dsgd;
  // Uniform complete client-level mixing, self-weight included, so the
  // noiseless slot lands every client on the global average.
  const double weight = 1.0 / static_cast<double>(clients);
  // All links share the first configured receiver variance.
  const double link_sigma2 = mix ? cfg.channel.sigma2.front() : 0.0;

  RunTrace trace;
  trace.protocol = protocol_name(cfg.protocol);
  trace.seed = cfg.init_seed;
  trace.heads = 1;
  trace.rows.push_back(eval_row(cfg, shards, eval, 0, client_params, client_params, false));

  long long uses = 0;
  int round = 0;
  for (int t = 1; t <= cfg.total_steps; ++t) {
    const double eta = cfg.lr.at(t - 1);
    for (std::size_t k = 0; k < clients; ++k) {
      const auto batch = samplers[k].next();
      const ParamVector grad =
          local_gradient(cfg.model, client_params[k], shards[k], batch, nullptr);
      client_params[k] = sgd_step(client_params[k], grad, eta);
      check_finite(client_params[k], cfg.protocol, t, "local step");
    }
    if (!schedule.is_slot(t)) continue;
    ++round;

    if (mix) {
      std::vector<ParamVector> mixed(clients);
      for (std::size_t k = 0; k < clients; ++k) {
        ParamVector acc = weight * client_params[k];
        for (std::size_t j = 0; j < clients; ++j) {
          if (j == k) continue;
          Rng stream = noise_stream(cfg.channel, kPhaseDsgd, static_cast<std::uint64_t>(round),
                                    static_cast<std::uint64_t>(k),
                                    static_cast<std::uint64_t>(j) + 1);
          const ParamVector noise = sample_noise(d, link_sigma2, stream);
          acc.noalias() += weight * (client_params[j] + noise);
        }
        check_finite(acc, cfg.protocol, t, "gossip mix");
        mixed[k] = std::move(acc);
      }
      client_params = std::move(mixed);
    }

    uses += channel_uses_per_slot(cfg.protocol, static_cast<int>(clients), 1);
    MetricsRow row = eval_row(cfg, shards, eval, t, client_params, client_params, false);
    row.channel_uses = uses;
    trace.rows.push_back(std::move(row));
  }

  if (trace.rows.back().t != cfg.total_steps) {
    MetricsRow row =
        eval_row(cfg, shards, eval, cfg.total_steps, client_params, client_params, false);
    row.channel_uses = uses;
    trace.rows.push_back(std::move(row));
  }

  ParamVector mean = ParamVector::Zero(d);
  for (const auto& p : client_params) mean += p;
  trace.final_params = {mean / static_cast<double>(clients)};
  return trace;
}

}  // namespace

RunTrace run_protocol(const ProtocolConfig& config, std::span<const ClientShard> shards,
                      const EvalContext& eval) {
  switch (config.protocol) {
    case Protocol::Cwfl:
    case Protocol::CwflProx:
      return run_clustered(config, shards, eval, true);
    case Protocol::Cotaf:
    case Protocol::CotafProx:
      return run_clustered(config, shards, eval, false);
    case Protocol::Dsgd:
    case Protocol::LocalOnly:
      return run_flat(config, shards, eval);
  }
  throw std::invalid_argument("run_protocol: unknown protocol");
}

namespace {

RunTrace run_as(Protocol protocol, const ProtocolConfig& config,
                std::span<const ClientShard> shards, const EvalContext& eval) {
  ProtocolConfig cfg = config;
  cfg.protocol = protocol;
  return run_protocol(cfg, shards, eval);
}

}  // namespace

RunTrace run_cwfl(const ProtocolConfig& config, std::span<const ClientShard> shards,
                  const EvalContext& eval) {
  return run_as(Protocol::Cwfl, config, shards, eval);
}
RunTrace run_cwfl_prox(const ProtocolConfig& config, std::span<const ClientShard> shards,
                       const EvalContext& eval) {
  return run_as(Protocol::CwflProx, config, shards, eval);
}
RunTrace run_cotaf(const ProtocolConfig& config, std::span<const ClientShard> shards,
                   const EvalContext& eval) {
  return run_as(Protocol::Cotaf, config, shards, eval);
}
RunTrace run_cotaf_prox(const ProtocolConfig& config, std::span<const ClientShard> shards,
                        const EvalContext& eval) {
  return run_as(Protocol::CotafProx, config, shards, eval);
}
RunTrace run_dsgd(const ProtocolConfig& config, std::span<const ClientShard> shards,
                  const EvalContext& eval) {
  return run_as(Protocol::Dsgd, config, shards, eval);
}
RunTrace run_local_only(const ProtocolConfig& config, std::span<const ClientShard> shards,
                        const EvalContext& eval) {
  return run_as(Protocol::LocalOnly, config, shards, eval);
}

}  // namespace otafl
