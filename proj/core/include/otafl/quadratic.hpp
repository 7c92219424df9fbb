#pragma once

#include <span>

#include "otafl/data.hpp"
#include "otafl/types.hpp"

namespace otafl {

/// Closed-form facts about a ridge-quadratic federation: the global optimum,
/// the smoothness/strong-convexity pair (extreme eigenvalues of the global
/// Hessian), and the heterogeneity gap
///   Gamma = F(theta*) - (1/K) sum_k min_theta f_k(theta).
struct QuadraticConstants {
  ParamVector theta_star;
  double smoothness = 0.0;        // L
  double strong_convexity = 0.0;  // mu
  double heterogeneity = 0.0;     // Gamma
};

QuadraticConstants quadratic_constants_and_optimum(std::span<const ClientShard> shards,
                                                   double l2_coeff);

}  // namespace otafl
