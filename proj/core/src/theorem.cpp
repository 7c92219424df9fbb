#include "otafl/theorem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "otafl/rng.hpp"

namespace otafl {

double TheoremConstants::eta_at(int t) const {
  return 2.0 / (strong_convexity * (gamma + t));
}

double TheoremConstants::bound_at(int t, int head, double delta0) const {
  const double mu2 = strong_convexity * strong_convexity;
  const double q1 = heads[static_cast<std::size_t>(head)].q1;
  return 2.0 * std::max(4.0 * q1, mu2 * gamma * delta0) / (mu2 * (t + gamma - 1.0));
}

int TheoremConstants::worst_head() const {
  int worst = 0;
  for (std::size_t c = 1; c < heads.size(); ++c) {
    if (heads[c].q1 > heads[static_cast<std::size_t>(worst)].q1) worst = static_cast<int>(c);
  }
  return worst;
}

std::string TheoremConstants::report() const {
  std::ostringstream out;
  out << "L=" << smoothness << " mu=" << strong_convexity << " G=" << gradient_bound
      << " Gamma=" << heterogeneity << " gamma=" << gamma << " eta0=" << eta_at(0)
      << " d=" << param_dim << " E=" << steps_per_round << " P1=" << uplink_power
      << " P2=" << consensus_power << "\n";
  for (std::size_t c = 0; c < heads.size(); ++c) {
    const auto& h = heads[c];
    out << "head " << c << ": K_c=" << h.cluster_size << " kappa2=" << h.kappa2
        << " A=" << h.a_term << " Q1=" << h.q1 << " sum_alpha2=" << h.alpha2_sum << "\n";
  }
  return out.str();
}

TheoremConstants theorem_constants(const TheoremInputs& in) {
  if (in.strong_convexity <= 0.0) {
    throw std::invalid_argument("theorem_constants: mu must be > 0");
  }
  if (in.smoothness < in.strong_convexity) {
    throw std::invalid_argument("theorem_constants: L must be >= mu");
  }
  if (in.uplink_power <= 0.0 || in.consensus_power <= 0.0 || in.param_dim < 1 ||
      in.steps_per_round < 1 || in.gradient_bound <= 0.0 || in.heterogeneity < 0.0) {
    throw std::invalid_argument("theorem_constants: inputs out of range");
  }
  const int clusters = in.layout.clusters();
  if (in.mixing.size() != clusters ||
      static_cast<int>(in.sigma2.size()) != clusters) {
    throw std::invalid_argument("theorem_constants: mixing/sigma2 size mismatch");
  }
  if (static_cast<int>(in.alpha2.size()) != in.layout.clients()) {
    throw std::invalid_argument("theorem_constants: need one alpha_k^2 per client");
  }

  TheoremConstants out;
  out.smoothness = in.smoothness;
  out.strong_convexity = in.strong_convexity;
  out.gradient_bound = in.gradient_bound;
  out.heterogeneity = in.heterogeneity;
  out.uplink_power = in.uplink_power;
  out.consensus_power = in.consensus_power;
  out.param_dim = in.param_dim;
  out.steps_per_round = in.steps_per_round;
  out.gamma = std::max<double>(in.steps_per_round, 12.0 * in.smoothness / in.strong_convexity);

  const double e2g2 =
      static_cast<double>(in.steps_per_round) * in.steps_per_round *
      in.gradient_bound * in.gradient_bound;  // E^2 G^2
  const double d = in.param_dim;
  const double c_count = clusters;

  // max_c kappa_c^2 enters every head's A term.
  double max_kappa2 = 0.0;
  std::vector<double> kappa2(static_cast<std::size_t>(clusters));
  for (int c = 0; c < clusters; ++c) {
    double k2 = 0.0;
    for (int j = 0; j < clusters; ++j) {
      k2 += in.mixing.weights(c, j) * in.sigma2[static_cast<std::size_t>(j)];
    }
    kappa2[static_cast<std::size_t>(c)] = k2;
    max_kappa2 = std::max(max_kappa2, k2);
  }

  out.heads.resize(static_cast<std::size_t>(clusters));
  for (int c = 0; c < clusters; ++c) {
    HeadConstants& h = out.heads[static_cast<std::size_t>(c)];
    h.cluster_size = in.layout.cluster_size(c);
    h.kappa2 = kappa2[static_cast<std::size_t>(c)];
    h.alpha2_sum = 0.0;
    for (int k : in.layout.members[static_cast<std::size_t>(c)]) {
      h.alpha2_sum += in.alpha2[static_cast<std::size_t>(k)];
    }
    const double w_row_sq = in.mixing.weights.row(c).squaredNorm();
    const double k_c = h.cluster_size;
    const double sigma_c = in.sigma2[static_cast<std::size_t>(c)];

    // A = (8 E^2 G^2 / (P1 P2)) (C P2 sum_j W(c,j)^2 + d max_c kappa_c^2
    //     + P1 + (2 K_c)^-1), indicator relaxed to 1.
    h.a_term = 8.0 * e2g2 / (in.uplink_power * in.consensus_power) *
               (c_count * in.consensus_power * w_row_sq + d * max_kappa2 + in.uplink_power +
                1.0 / (2.0 * k_c));

    // Q1 = 3 C sum_j W(c,j)^2 P2 A + 8 E^2 G^2 + 6 L Gamma
    //      + K_c^-2 sum_k alpha_k^2 + 4 d sigma_c^2 E^2 G^2 / (P1 K_c^2)
    //      + d kappa_c^2 A.
    h.q1 = 3.0 * c_count * w_row_sq * in.consensus_power * h.a_term + 8.0 * e2g2 +
           6.0 * in.smoothness * in.heterogeneity + h.alpha2_sum / (k_c * k_c) +
           4.0 * d * sigma_c * e2g2 / (in.uplink_power * k_c * k_c) + d * h.kappa2 * h.a_term;
  }
  return out;
}

GradientBoundEstimate estimate_gradient_bound(const ModelSpec& spec,
                                              std::span<const ClientShard> shards,
                                              const ParamVector& theta0, int batch_size,
                                              std::uint64_t seed, double safety_factor) {
  if (shards.empty()) throw std::invalid_argument("estimate_gradient_bound: no shards");
  if (batch_size < 1) throw std::invalid_argument("estimate_gradient_bound: batch_size >= 1");

  GradientBoundEstimate out;
  out.alpha2.reserve(shards.size());
  Rng root(seed);
  const double warmup_eta = 0.5 / std::max(1.0, static_cast<double>(batch_size));

  for (std::size_t k = 0; k < shards.size(); ++k) {
    const auto& shard = shards[k];
    const ParamVector g_full = full_gradient(spec, theta0, shard);
    Rng rng = root.substream(k);
    std::vector<int> order(shard.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    // Variance of the stochastic gradient around the full-batch gradient at
    // theta0, estimated over the epoch's batches.
    const std::size_t batch =
        std::min<std::size_t>(static_cast<std::size_t>(batch_size), shard.size());
    double var_sum = 0.0;
    int batches = 0;
    for (std::size_t pos = 0; pos < order.size(); pos += batch) {
      const std::size_t take = std::min(batch, order.size() - pos);
      std::span<const int> idx(order.data() + pos, take);
      const ParamVector g = local_gradient(spec, theta0, shard, idx);
      var_sum += (g - g_full).squaredNorm();
      ++batches;
    }
    out.alpha2.push_back(var_sum / std::max(1, batches));

    // One-epoch SGD walk from theta0 to sample gradient norms near the start
    // of a run, where a converging trajectory peaks.
    ParamVector theta = theta0;
    out.max_observed = std::max(out.max_observed, g_full.norm());
    for (std::size_t pos = 0; pos < order.size(); pos += batch) {
      const std::size_t take = std::min(batch, order.size() - pos);
      std::span<const int> idx(order.data() + pos, take);
      const ParamVector g = local_gradient(spec, theta, shard, idx);
      out.max_observed = std::max(out.max_observed, g.norm());
      theta -= warmup_eta * g;
    }
  }
  out.gradient_bound = safety_factor * out.max_observed;
  return out;
}

double fit_convergence_slope(const RunTrace& trace, double t_min, double t_max) {
  if (t_min <= 0.0 || t_max <= t_min) {
    throw std::invalid_argument("fit_convergence_slope: need 0 < t_min < t_max");
  }
  double slope_sum = 0.0;
  int heads_used = 0;
  for (int head = 0; head < trace.heads; ++head) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (const auto& row : trace.rows) {
      if (row.t < t_min || row.t > t_max) continue;
      if (static_cast<std::size_t>(head) >= row.dist_to_opt.size()) continue;
      const double delta = row.dist_to_opt[static_cast<std::size_t>(head)];
      if (!(delta > 0.0)) {
        throw std::runtime_error("fit_convergence_slope: non-positive delta at t=" +
                                 std::to_string(row.t) + ", head " + std::to_string(head));
      }
      const double x = std::log(static_cast<double>(row.t));
      const double y = std::log(delta);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    if (n < 2) continue;
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) continue;
    slope_sum += (n * sxy - sx * sy) / denom;
    ++heads_used;
  }
  if (heads_used == 0) {
    throw std::runtime_error("fit_convergence_slope: no usable rows in [t_min, t_max]");
  }
  return slope_sum / heads_used;
}

BoundCheckReport check_bound_dominance(std::span<const RunTrace> traces,
                                       const TheoremConstants& constants) {
  if (traces.empty()) throw std::invalid_argument("check_bound_dominance: no traces");
  const int heads = traces.front().heads;
  const std::size_t rows = traces.front().rows.size();
  for (const auto& trace : traces) {
    if (trace.heads != heads || trace.rows.size() != rows) {
      throw std::invalid_argument("check_bound_dominance: traces are not aligned");
    }
  }
  if (static_cast<int>(constants.heads.size()) != heads) {
    throw std::invalid_argument("check_bound_dominance: constants/head count mismatch");
  }

  // Realized delta0 per head, seed-averaged from the t = 0 rows.
  std::vector<double> delta0(static_cast<std::size_t>(heads), 0.0);
  for (const auto& trace : traces) {
    for (int c = 0; c < heads; ++c) {
      delta0[static_cast<std::size_t>(c)] +=
          trace.rows.front().dist_to_opt.at(static_cast<std::size_t>(c));
    }
  }
  for (auto& v : delta0) v /= static_cast<double>(traces.size());

  BoundCheckReport report;
  const int worst = constants.worst_head();
  for (std::size_t i = 1; i < rows; ++i) {
    const long t = traces.front().rows[i].t;
    if (t < 1) continue;
    for (int c = 0; c < heads; ++c) {
      double mean_delta = 0.0;
      for (const auto& trace : traces) {
        mean_delta += trace.rows[i].dist_to_opt.at(static_cast<std::size_t>(c));
      }
      mean_delta /= static_cast<double>(traces.size());
      const double bound =
          constants.bound_at(static_cast<int>(t), c, delta0[static_cast<std::size_t>(c)]);
      const bool violated = mean_delta > bound;
      ++report.checked;
      if (violated) ++report.violations;
      if (c == worst) {
        report.rows.push_back(BoundCheckRow{t, mean_delta, bound, violated});
      }
    }
  }
  return report;
}

}  // namespace otafl
