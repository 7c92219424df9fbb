#pragma once

#include <span>
#include <string>

#include "otafl/data.hpp"
#include "otafl/types.hpp"

namespace otafl {

enum class ModelKind {
  RidgeQuadratic,        // per-client least squares + L2; closed-form optimum
  MultinomialLogistic,   // softmax cross-entropy + L2 on all parameters
  OneHiddenMlp,          // tanh hidden layer + softmax; non-convex, qualitative runs
};

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::RidgeQuadratic;
  int feature_dim = 0;
  int num_classes = 0;   // classifiers only
  int hidden_units = 0;  // MLP only
  double l2_coeff = 0.0;

  /// Total parameter count d; a pure function of kind and dims.
  int param_dim() const;
  bool is_classifier() const { return kind != ModelKind::RidgeQuadratic; }
  void validate() const;
};

/// FedProx-style penalty (lambda_p/2)||theta - anchor||^2 added to the local
/// objective. lambda_p = 0 reduces to the unconstrained objective.
struct ProxConfig {
  double lambda_p = 0.0;
  ParamVector anchor;
};

/// Mean per-instance loss over the shard plus the spec's L2 term (and the
/// proximal term when given).
double local_loss(const ModelSpec& spec, const ParamVector& params, const ClientShard& shard,
                  const ProxConfig* prox = nullptr);

/// Analytic gradient of the mini-batch loss at `params`. `batch` holds indices
/// into shard.instances; it must be nonempty.
ParamVector local_gradient(const ModelSpec& spec, const ParamVector& params,
                           const ClientShard& shard, std::span<const int> batch,
                           const ProxConfig* prox = nullptr);

/// Gradient over the whole shard.
ParamVector full_gradient(const ModelSpec& spec, const ParamVector& params,
                          const ClientShard& shard, const ProxConfig* prox = nullptr);

ParamVector sgd_step(const ParamVector& params, const ParamVector& gradient, double eta);

/// (1/K) sum of local losses: the paper-style global objective.
double global_objective(const ModelSpec& spec, const ParamVector& params,
                        std::span<const ClientShard> shards);

/// Fraction of test instances whose argmax class matches the label.
double accuracy(const ModelSpec& spec, const ParamVector& params, const Dataset& test_set);

}  // namespace otafl
