#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/data.hpp"
#include "otafl/model.hpp"
#include "otafl/topology.hpp"
#include "otafl/trace.hpp"
#include "otafl/types.hpp"

namespace otafl {

/// Aggregation slots H = { t in [1, T] : t mod E == 0 }.
struct RoundSchedule {
  int total_steps = 0;      // T, counted in local SGD steps
  int steps_per_round = 1;  // E
  std::vector<int> slots;   // ascending

  bool is_slot(int t) const { return t > 0 && t % steps_per_round == 0 && t <= total_steps; }
};

RoundSchedule schedule_aggregations(int total_steps, int steps_per_round);

enum class Protocol { Cwfl, CwflProx, Cotaf, CotafProx, Dsgd, LocalOnly };

std::string protocol_name(Protocol protocol);
Protocol protocol_from_name(const std::string& name);
bool protocol_is_clustered(Protocol protocol);
bool protocol_is_prox(Protocol protocol);

enum class LrScheduleKind { Constant, Theorem };

/// Constant eta, or the strongly convex schedule eta^t = 2 / (mu (gamma + t)).
struct LrSchedule {
  LrScheduleKind kind = LrScheduleKind::Constant;
  double eta = 1e-3;
  double mu = 0.0;
  double gamma = 0.0;

  double at(int t) const;
};

/// Snapshot handed to the per-slot observer right after the broadcast phase.
/// References stay valid only during the callback.
struct SlotObservation {
  int t = 0;
  int round = 0;
  const std::vector<ParamVector>& client_params;  // post-broadcast
  const std::vector<ParamVector>& head_estimates;  // theta_tilde per head
  const std::vector<ParamVector>& head_consensus;  // theta_bar per head
  const std::vector<ParamVector>& decode_anchors;  // anchors used by this slot's decode
  double p_factor;
  double q_factor;
};

struct ProtocolConfig {
  Protocol protocol = Protocol::Cwfl;
  ModelSpec model;
  ChannelEnv channel;
  ClusterLayout layout;   // clustered protocols; single(K) works for COTAF
  MixingMatrix mixing;    // clustered protocols
  int total_steps = 0;
  int steps_per_round = 1;
  int batch_size = 32;
  double lambda_p = 0.0;  // prox protocols require > 0
  LrSchedule lr;
  DecodeMode decode = DecodeMode::Normalized;
  PrecodeMode precode = PrecodeMode::Genie;
  ConsensusNoiseMode consensus_noise = ConsensusNoiseMode::Direct;
  double gradient_bound = 0.0;  // required by PrecodeMode::Bound
  std::uint64_t init_seed = 1;
  std::uint64_t order_seed = 2;

  std::function<void(const SlotObservation&)> observer;  // test hook, may be empty
};

/// Optional oracle context: enables the distance-to-optimum column and the
/// test-accuracy column.
struct EvalContext {
  const ParamVector* theta_star = nullptr;
  const Dataset* test_set = nullptr;
};

/// Dispatches on config.protocol. All runs start from a shared theta^0 drawn
/// from N(0, 0.01 I) under init_seed, consume per-client minibatch streams
/// keyed by order_seed, and reduce in ascending id order, so identical
/// (config, seed) inputs give bit-identical traces.
RunTrace run_protocol(const ProtocolConfig& config, std::span<const ClientShard> shards,
                      const EvalContext& eval = {});

RunTrace run_cwfl(const ProtocolConfig& config, std::span<const ClientShard> shards,
                  const EvalContext& eval = {});
RunTrace run_cwfl_prox(const ProtocolConfig& config, std::span<const ClientShard> shards,
                       const EvalContext& eval = {});
RunTrace run_cotaf(const ProtocolConfig& config, std::span<const ClientShard> shards,
                   const EvalContext& eval = {});
RunTrace run_cotaf_prox(const ProtocolConfig& config, std::span<const ClientShard> shards,
                        const EvalContext& eval = {});
RunTrace run_dsgd(const ProtocolConfig& config, std::span<const ClientShard> shards,
                  const EvalContext& eval = {});
RunTrace run_local_only(const ProtocolConfig& config, std::span<const ClientShard> shards,
                        const EvalContext& eval = {});

/// Channel uses consumed by one aggregation slot: C^2 for CWFL (C uplink
/// aggregations plus C(C-1) head exchanges), 1 for COTAF, K(K-1) for DSGD,
/// 0 for local-only.
long long channel_uses_per_slot(Protocol protocol, int clients, int clusters);

}  // namespace otafl
