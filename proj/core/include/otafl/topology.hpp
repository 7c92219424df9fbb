#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otafl/types.hpp"

namespace otafl {

/// Non-overlapping assignment of K clients to C cluster-heads.
/// members[c] lists client ids in ascending order; sizes sum to K and every
/// cluster is nonempty.
struct ClusterLayout {
  std::vector<int> assignment;            // client id -> cluster id
  std::vector<std::vector<int>> members;  // cluster id -> ascending client ids

  int clusters() const { return static_cast<int>(members.size()); }
  int clients() const { return static_cast<int>(assignment.size()); }
  int cluster_size(int c) const { return static_cast<int>(members[static_cast<std::size_t>(c)].size()); }

  /// Everyone in one cluster; the single-server topology.
  static ClusterLayout single(int clients);

  void validate() const;
};

/// Uniformly random balanced-as-possible partition (sizes differ by <= 1),
/// deterministic in `seed`.
ClusterLayout random_clusters(int clients, int clusters, std::uint64_t seed);

/// Symmetric, zero-diagonal, row-stochastic weights over the cluster-head
/// graph. W(c,j) = 0 means heads c and j are disconnected.
struct MixingMatrix {
  Eigen::MatrixXd weights;

  int size() const { return static_cast<int>(weights.rows()); }
  double row_sum(int c) const { return weights.row(c).sum(); }
};

/// W(c,j) = 1/(C-1) off the diagonal; the 1x1 zero matrix for C = 1.
MixingMatrix mixing_uniform_complete(int clusters);

/// Each head weights its two ring neighbors 1/2. Requires C >= 3.
MixingMatrix mixing_ring(int clusters);

struct MixingValidation {
  bool symmetric = false;
  bool zero_diagonal = false;
  bool nonnegative = false;
  bool row_stochastic = false;  // rows sum to 1 (C >= 2); the 1x1 zero matrix passes

  bool ok() const { return symmetric && zero_diagonal && nonnegative && row_stochastic; }
  std::string summary() const;
};

MixingValidation validate_mixing(const Eigen::MatrixXd& weights);

/// Text forms embedded in run manifests for reproducibility.
std::string layout_manifest(const ClusterLayout& layout);
std::string mixing_manifest(const MixingMatrix& mixing);

}  // namespace otafl
