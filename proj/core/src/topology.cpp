#include "otafl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "otafl/rng.hpp"

namespace otafl {

ClusterLayout ClusterLayout::single(int clients) {
  if (clients < 1) throw std::invalid_argument("ClusterLayout::single: clients must be >= 1");
  ClusterLayout layout;
  layout.assignment.assign(static_cast<std::size_t>(clients), 0);
  layout.members.resize(1);
  layout.members[0].resize(static_cast<std::size_t>(clients));
  std::iota(layout.members[0].begin(), layout.members[0].end(), 0);
  return layout;
}

void ClusterLayout::validate() const {
  std::size_t total = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].empty()) throw std::runtime_error("layout: empty cluster");
    total += members[c].size();
    for (int k : members[c]) {
      if (k < 0 || static_cast<std::size_t>(k) >= assignment.size() ||
          assignment[static_cast<std::size_t>(k)] != static_cast<int>(c)) {
        throw std::runtime_error("layout: assignment and members disagree");
      }
    }
    if (!std::is_sorted(members[c].begin(), members[c].end())) {
      throw std::runtime_error("layout: member lists must be ascending");
    }
  }
  if (total != assignment.size()) {
    throw std::runtime_error("layout: clusters do not partition the clients");
  }
}

ClusterLayout random_clusters(int clients, int clusters, std::uint64_t seed) {
  if (clusters < 1 || clusters > clients) {
    throw std::invalid_argument("random_clusters: need 1 <= clusters <= clients");
  }
  std::vector<int> order(static_cast<std::size_t>(clients));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  ClusterLayout layout;
  layout.assignment.assign(static_cast<std::size_t>(clients), -1);
  layout.members.resize(static_cast<std::size_t>(clusters));
  const int base = clients / clusters;
  const int extra = clients % clusters;
  std::size_t next = 0;
  for (int c = 0; c < clusters; ++c) {
    const int size = base + (c < extra ? 1 : 0);
    for (int i = 0; i < size; ++i) {
      const int client = order[next++];
      layout.assignment[static_cast<std::size_t>(client)] = c;
      layout.members[static_cast<std::size_t>(c)].push_back(client);
    }
    std::sort(layout.members[static_cast<std::size_t>(c)].begin(),
              layout.members[static_cast<std::size_t>(c)].end());
  }
  layout.validate();
  return layout;
}

MixingMatrix mixing_uniform_complete(int clusters) {
  if (clusters < 1) throw std::invalid_argument("mixing_uniform_complete: clusters must be >= 1");
  MixingMatrix m;
  if (clusters == 1) {
    m.weights = Eigen::MatrixXd::Zero(1, 1);
    return m;
  }
  const double w = 1.0 / static_cast<double>(clusters - 1);
  m.weights = Eigen::MatrixXd::Constant(clusters, clusters, w);
  m.weights.diagonal().setZero();
  return m;
}

MixingMatrix mixing_ring(int clusters) {
  if (clusters < 3) throw std::invalid_argument("mixing_ring: clusters must be >= 3");
  MixingMatrix m;
  m.weights = Eigen::MatrixXd::Zero(clusters, clusters);
  for (int c = 0; c < clusters; ++c) {
    m.weights(c, (c + 1) % clusters) = 0.5;
    m.weights(c, (c + clusters - 1) % clusters) = 0.5;
  }
  return m;
}

MixingValidation validate_mixing(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols()) {
    throw std::invalid_argument("validate_mixing: matrix must be square");
  }
  constexpr double kTol = 1e-12;
  MixingValidation v;
  v.symmetric = weights.isApprox(weights.transpose(), kTol);
  v.zero_diagonal = weights.diagonal().cwiseAbs().maxCoeff() <= kTol;
  v.nonnegative = weights.minCoeff() >= -kTol;
  if (weights.rows() == 1) {
    v.row_stochastic = std::abs(weights(0, 0)) <= kTol;
  } else {
    v.row_stochastic = (weights.rowwise().sum().array() - 1.0).abs().maxCoeff() <= kTol;
  }
  return v;
}

std::string MixingValidation::summary() const {
  std::ostringstream out;
  out << "symmetric=" << (symmetric ? "pass" : "FAIL")
      << " zero_diagonal=" << (zero_diagonal ? "pass" : "FAIL")
      << " nonnegative=" << (nonnegative ? "pass" : "FAIL")
      << " row_stochastic=" << (row_stochastic ? "pass" : "FAIL");
  return out.str();
}

std::string layout_manifest(const ClusterLayout& layout) {
  std::ostringstream out;
  out << "clients " << layout.clients() << "\nclusters " << layout.clusters() << "\n";
  for (int c = 0; c < layout.clusters(); ++c) {
    out << "cluster " << c << ":";
    for (int k : layout.members[static_cast<std::size_t>(c)]) out << ' ' << k;
    out << "\n";
  }
  return out.str();
}

std::string mixing_manifest(const MixingMatrix& mixing) {
  std::ostringstream out;
  out << "mixing " << mixing.size() << "x" << mixing.size() << "\n";
  char buf[32];
  for (int c = 0; c < mixing.size(); ++c) {
    for (int j = 0; j < mixing.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", mixing.weights(c, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace otafl
