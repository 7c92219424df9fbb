#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "otafl/types.hpp"

namespace otafl {

/// One labelled example. `label` holds an integer class id for classification
/// datasets or a real regression target for least-squares data.
struct Instance {
  Eigen::VectorXd features;
  double label = 0.0;
};

struct Dataset {
  std::vector<Instance> instances;
  int feature_dim = 0;
  int num_classes = 0;  // 0 for regression data
};

/// A client's local data plus its identity. Invariant: size() >= 1.
struct ClientShard {
  int client_id = 0;
  std::vector<Instance> instances;

  std::size_t size() const { return instances.size(); }
};

/// Per-client least-squares problems with a tunable degree of statistical
/// heterogeneity. At heterogeneity 0 every client samples the same
/// ground-truth parameter; at 1 each client gets a fully distinct one.
/// Deterministic in `seed`.
std::vector<ClientShard> generate_synthetic_quadratic(std::uint64_t seed, int clients,
                                                      int per_client_size, int feature_dim,
                                                      double heterogeneity,
                                                      double observation_noise = 0.1);

/// Gaussian class blobs for multi-class classification experiments.
/// Features are scaled into [0, 1] so the dataset round-trips through the
/// unsigned-byte IDX container.
Dataset generate_class_blobs(std::uint64_t seed, int instances, int feature_dim,
                             int num_classes, double class_sep = 3.0);

/// Label-skew partition: each client is assigned `classes_per_client` random
/// classes, then every class's instances are split uniformly among the
/// clients holding that class. Shards are disjoint; their union may be a
/// strict subset of the dataset when some class is held by nobody.
std::vector<ClientShard> shard_by_label_skew(const Dataset& dataset, int clients,
                                             int classes_per_client, std::uint64_t seed);

/// Uniform random partition into `clients` near-equal shards (IID split).
std::vector<ClientShard> shard_uniform(const Dataset& dataset, int clients,
                                       std::uint64_t seed);

/// Splits off a central held-out test set; the remainder is for training.
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed);

/// Line-oriented text format: one instance per line, label first, then the
/// feature values, comma-separated.
void write_text_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_text_dataset(const std::filesystem::path& path);

/// MNIST-style IDX pair: an image tensor (n, ...) and a label vector (n).
/// Features are bytes scaled to [0, 1] on load and quantized back on store.
Dataset load_idx_dataset(const std::filesystem::path& images,
                         const std::filesystem::path& labels);
void write_idx_dataset(const Dataset& dataset, const std::filesystem::path& images,
                       const std::filesystem::path& labels);

}  // namespace otafl
