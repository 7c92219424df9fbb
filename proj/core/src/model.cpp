#include "otafl/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace otafl {

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::RidgeQuadratic: return "ridge-quadratic";
    case ModelKind::MultinomialLogistic: return "multinomial-logistic-l2";
    case ModelKind::OneHiddenMlp: return "one-hidden-layer-mlp";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "ridge-quadratic") return ModelKind::RidgeQuadratic;
  if (name == "multinomial-logistic-l2") return ModelKind::MultinomialLogistic;
  if (name == "one-hidden-layer-mlp") return ModelKind::OneHiddenMlp;
  throw std::invalid_argument("unknown model kind: " + name);
}

int ModelSpec::param_dim() const {
  switch (kind) {
    case ModelKind::RidgeQuadratic:
      return feature_dim;
    case ModelKind::MultinomialLogistic:
      // Per class: a weight row plus a bias.
      return num_classes * (feature_dim + 1);
    case ModelKind::OneHiddenMlp:
      return hidden_units * (feature_dim + 1) + num_classes * (hidden_units + 1);
  }
  return 0;
}

void ModelSpec::validate() const {
  if (feature_dim < 1) throw std::invalid_argument("model: feature_dim must be >= 1");
  if (is_classifier() && num_classes < 2) {
    throw std::invalid_argument("model: classifiers need num_classes >= 2");
  }
  if (kind == ModelKind::OneHiddenMlp && hidden_units < 1) {
    throw std::invalid_argument("model: MLP needs hidden_units >= 1");
  }
  if (kind != ModelKind::OneHiddenMlp && l2_coeff <= 0.0) {
    // Strong convexity of the two convex kinds comes from the ridge term.
    throw std::invalid_argument("model: convex kinds require l2_coeff > 0");
  }
  if (l2_coeff < 0.0) throw std::invalid_argument("model: l2_coeff must be >= 0");
}

namespace {

void check_dims(const ModelSpec& spec, const ParamVector& params) {
  if (params.size() != spec.param_dim()) {
    throw std::invalid_argument("model: parameter vector has length " +
                                std::to_string(params.size()) + ", spec wants " +
                                std::to_string(spec.param_dim()));
  }
}

// --- multinomial logistic helpers -----------------------------------------
// Layout: class c occupies params[c*(m+1) .. c*(m+1)+m-1] (weights) and
// params[c*(m+1)+m] (bias).

Eigen::VectorXd logistic_logits(const ModelSpec& spec, const ParamVector& params,
                                const Eigen::VectorXd& x) {
  const int m = spec.feature_dim;
  Eigen::VectorXd logits(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    const auto w = params.segment(c * (m + 1), m);
    logits[c] = w.dot(x) + params[c * (m + 1) + m];
  }
  return logits;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double peak = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - peak).exp();
  return p / p.sum();
}

double cross_entropy(const Eigen::VectorXd& logits, int label) {
  const double peak = logits.maxCoeff();
  const double log_sum = std::log((logits.array() - peak).exp().sum()) + peak;
  return log_sum - logits[label];
}

// --- one-hidden-layer MLP helpers ------------------------------------------
// Layout: [W1 (h x m) row-major, b1 (h), W2 (C x h) row-major, b2 (C)].

struct MlpView {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w1;
  Eigen::Map<const Eigen::VectorXd> b1;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w2;
  Eigen::Map<const Eigen::VectorXd> b2;
};

MlpView mlp_view(const ModelSpec& spec, const ParamVector& params) {
  const int m = spec.feature_dim, h = spec.hidden_units, c = spec.num_classes;
  const double* p = params.data();
  return MlpView{
      {p, h, m},
      {p + h * m, h},
      {p + h * m + h, c, h},
      {p + h * m + h + c * h, c},
  };
}

double instance_loss(const ModelSpec& spec, const ParamVector& params, const Instance& inst) {
  switch (spec.kind) {
    case ModelKind::RidgeQuadratic: {
      const double r = inst.features.dot(params) - inst.label;
      return 0.5 * r * r;
    }
    case ModelKind::MultinomialLogistic:
      return cross_entropy(logistic_logits(spec, params, inst.features),
                           static_cast<int>(inst.label));
    case ModelKind::OneHiddenMlp: {
      const auto v = mlp_view(spec, params);
      const Eigen::VectorXd hidden = (v.w1 * inst.features + v.b1).array().tanh();
      const Eigen::VectorXd logits = v.w2 * hidden + v.b2;
      return cross_entropy(logits, static_cast<int>(inst.label));
    }
  }
  return 0.0;
}

void add_instance_gradient(const ModelSpec& spec, const ParamVector& params,
                           const Instance& inst, double scale, ParamVector& grad) {
  switch (spec.kind) {
    case ModelKind::RidgeQuadratic: {
      const double r = inst.features.dot(params) - inst.label;
      grad.noalias() += scale * r * inst.features;
      return;
    }
    case ModelKind::MultinomialLogistic: {
      const int m = spec.feature_dim;
      Eigen::VectorXd p = softmax(logistic_logits(spec, params, inst.features));
      p[static_cast<int>(inst.label)] -= 1.0;
      for (int c = 0; c < spec.num_classes; ++c) {
        grad.segment(c * (m + 1), m).noalias() += scale * p[c] * inst.features;
        grad[c * (m + 1) + m] += scale * p[c];
      }
      return;
    }
    case ModelKind::OneHiddenMlp: {
      const int m = spec.feature_dim, h = spec.hidden_units, cls = spec.num_classes;
      const auto v = mlp_view(spec, params);
      const Eigen::VectorXd pre = v.w1 * inst.features + v.b1;
      const Eigen::VectorXd hidden = pre.array().tanh();
      Eigen::VectorXd p = softmax(v.w2 * hidden + v.b2);
      p[static_cast<int>(inst.label)] -= 1.0;

      using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
      double* g = grad.data();
      Eigen::Map<RowMat> g_w1(g, h, m);
      Eigen::Map<Eigen::VectorXd> g_b1(g + h * m, h);
      Eigen::Map<RowMat> g_w2(g + h * m + h, cls, h);
      Eigen::Map<Eigen::VectorXd> g_b2(g + h * m + h + cls * h, cls);

      g_w2.noalias() += scale * p * hidden.transpose();
      g_b2.noalias() += scale * p;
      const Eigen::VectorXd back =
          (v.w2.transpose() * p).cwiseProduct((1.0 - hidden.array().square()).matrix());
      g_w1.noalias() += scale * back * inst.features.transpose();
      g_b1.noalias() += scale * back;
      return;
    }
  }
}

}  // namespace

double local_loss(const ModelSpec& spec, const ParamVector& params, const ClientShard& shard,
                  const ProxConfig* prox) {
  check_dims(spec, params);
  if (shard.instances.empty()) {
    throw std::invalid_argument("local_loss: shard is empty");
  }
  double sum = 0.0;
  for (const auto& inst : shard.instances) {
    if (inst.features.size() != spec.feature_dim) {
      throw std::invalid_argument("local_loss: instance feature dimension mismatch");
    }
    sum += instance_loss(spec, params, inst);
  }
  double loss = sum / static_cast<double>(shard.instances.size()) +
                0.5 * spec.l2_coeff * params.squaredNorm();
  if (prox != nullptr && prox->lambda_p != 0.0) {
    loss += 0.5 * prox->lambda_p * (params - prox->anchor).squaredNorm();
  }
  return loss;
}

ParamVector local_gradient(const ModelSpec& spec, const ParamVector& params,
                           const ClientShard& shard, std::span<const int> batch,
                           const ProxConfig* prox) {
  check_dims(spec, params);
  if (batch.empty()) {
    throw std::invalid_argument("local_gradient: batch is empty");
  }
  ParamVector grad = ParamVector::Zero(params.size());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (int idx : batch) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= shard.instances.size()) {
      throw std::invalid_argument("local_gradient: batch index out of range");
    }
    add_instance_gradient(spec, params, shard.instances[static_cast<std::size_t>(idx)], scale,
                          grad);
  }
  grad.noalias() += spec.l2_coeff * params;
  if (prox != nullptr && prox->lambda_p != 0.0) {
    grad.noalias() += prox->lambda_p * (params - prox->anchor);
  }
  return grad;
}

ParamVector full_gradient(const ModelSpec& spec, const ParamVector& params,
                          const ClientShard& shard, const ProxConfig* prox) {
  std::vector<int> all(shard.instances.size());
  std::iota(all.begin(), all.end(), 0);
  return local_gradient(spec, params, shard, all, prox);
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& gradient, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("sgd_step: eta must be > 0");
  if (gradient.size() != params.size()) {
    throw std::invalid_argument("sgd_step: dimension mismatch");
  }
  return params - eta * gradient;
}

double global_objective(const ModelSpec& spec, const ParamVector& params,
                        std::span<const ClientShard> shards) {
  if (shards.empty()) {
    throw std::invalid_argument("global_objective: no shards");
  }
  double sum = 0.0;
  for (const auto& shard : shards) sum += local_loss(spec, params, shard);
  return sum / static_cast<double>(shards.size());
}

double accuracy(const ModelSpec& spec, const ParamVector& params, const Dataset& test_set) {
  if (!spec.is_classifier()) {
    throw std::invalid_argument("accuracy: model is not a classifier");
  }
  if (test_set.instances.empty()) {
    throw std::invalid_argument("accuracy: empty test set");
  }
  check_dims(spec, params);
  std::size_t correct = 0;
  for (const auto& inst : test_set.instances) {
    Eigen::VectorXd logits;
    if (spec.kind == ModelKind::MultinomialLogistic) {
      logits = logistic_logits(spec, params, inst.features);
    } else {
      const auto v = mlp_view(spec, params);
      const Eigen::VectorXd hidden = (v.w1 * inst.features + v.b1).array().tanh();
      logits = v.w2 * hidden + v.b2;
    }
    int best = 0;
    logits.maxCoeff(&best);
    if (best == static_cast<int>(inst.label)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_set.instances.size());
}

}  // namespace otafl
