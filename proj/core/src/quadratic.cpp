#include "otafl/quadratic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

#include "otafl/model.hpp"

namespace otafl {

QuadraticConstants quadratic_constants_and_optimum(std::span<const ClientShard> shards,
                                                   double l2_coeff) {
  if (shards.empty()) {
    throw std::invalid_argument("quadratic_constants_and_optimum: no shards");
  }
  if (l2_coeff < 0.0) {
    throw std::invalid_argument("quadratic_constants_and_optimum: l2_coeff must be >= 0");
  }
  const auto m = shards.front().instances.front().features.size();
  const double inv_k = 1.0 / static_cast<double>(shards.size());

  // Per-client normal equations: H_k = (1/N_k) X_k' X_k + l2 I, b_k = (1/N_k) X_k' y_k.
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::MatrixXd> client_hessian;
  std::vector<Eigen::VectorXd> client_rhs;
  client_hessian.reserve(shards.size());
  client_rhs.reserve(shards.size());
  for (const auto& shard : shards) {
    if (shard.instances.empty()) {
      throw std::invalid_argument("quadratic_constants_and_optimum: empty shard");
    }
    Eigen::MatrixXd h_k = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b_k = Eigen::VectorXd::Zero(m);
    for (const auto& inst : shard.instances) {
      if (inst.features.size() != m) {
        throw std::invalid_argument("quadratic_constants_and_optimum: feature size mismatch");
      }
      h_k.noalias() += inst.features * inst.features.transpose();
      b_k.noalias() += inst.label * inst.features;
    }
    const double inv_n = 1.0 / static_cast<double>(shard.instances.size());
    h_k *= inv_n;
    h_k.diagonal().array() += l2_coeff;
    b_k *= inv_n;
    hessian += inv_k * h_k;
    rhs += inv_k * b_k;
    client_hessian.push_back(std::move(h_k));
    client_rhs.push_back(std::move(b_k));
  }

  Eigen::LDLT<Eigen::MatrixXd> solver(hessian);
  if (solver.info() != Eigen::Success || !solver.isPositive()) {
    throw std::runtime_error("quadratic_constants_and_optimum: singular global system "
                             "(is l2_coeff > 0?)");
  }

  QuadraticConstants out;
  out.theta_star = solver.solve(rhs);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian, Eigen::EigenvaluesOnly);
  out.smoothness = eig.eigenvalues().maxCoeff();
  out.strong_convexity = eig.eigenvalues().minCoeff();
  if (out.strong_convexity <= 0.0) {
    throw std::runtime_error("quadratic_constants_and_optimum: global Hessian is not positive "
                             "definite");
  }

  // Gamma = F(theta*) - (1/K) sum_k f_k(theta_k*).
  ModelSpec spec;
  spec.kind = ModelKind::RidgeQuadratic;
  spec.feature_dim = static_cast<int>(m);
  spec.l2_coeff = l2_coeff;
  const double f_star = global_objective(spec, out.theta_star, shards);
  double local_minima = 0.0;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    Eigen::LDLT<Eigen::MatrixXd> local(client_hessian[k]);
    if (local.info() != Eigen::Success || !local.isPositive()) {
      throw std::runtime_error("quadratic_constants_and_optimum: singular client system");
    }
    const Eigen::VectorXd theta_k = local.solve(client_rhs[k]);
    local_minima += local_loss(spec, theta_k, shards[k]);
  }
  // Nonnegative by optimality of the local minima; clamp roundoff.
  out.heterogeneity = std::max(0.0, f_star - local_minima * inv_k);
  return out;
}

}  // namespace otafl
