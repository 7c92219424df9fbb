#include "otafl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "otafl/idx.hpp"
#include "otafl/rng.hpp"

namespace otafl {

namespace {

Eigen::VectorXd gaussian_vec(Rng& rng, int dim, double std_dev) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = std_dev * rng.gaussian();
  return v;
}

}  // namespace

std::vector<ClientShard> generate_synthetic_quadratic(std::uint64_t seed, int clients,
                                                      int per_client_size, int feature_dim,
                                                      double heterogeneity,
                                                      double observation_noise) {
  if (clients < 1 || per_client_size < 1 || feature_dim < 1) {
    throw std::invalid_argument("generate_synthetic_quadratic: clients, per-client size and "
                                "feature dimension must all be >= 1");
  }
  if (heterogeneity < 0.0 || heterogeneity > 1.0) {
    throw std::invalid_argument("generate_synthetic_quadratic: heterogeneity must be in [0,1]");
  }

  Rng base(seed);
  const Eigen::VectorXd theta_common = gaussian_vec(base, feature_dim, 1.0);

  std::vector<ClientShard> shards;
  shards.reserve(static_cast<std::size_t>(clients));
  for (int k = 0; k < clients; ++k) {
    Rng rng = base.substream(static_cast<std::uint64_t>(k) + 1);
    const Eigen::VectorXd theta_k =
        theta_common + heterogeneity * gaussian_vec(rng, feature_dim, 1.0);

    ClientShard shard;
    shard.client_id = k;
    shard.instances.reserve(static_cast<std::size_t>(per_client_size));
    for (int i = 0; i < per_client_size; ++i) {
      Instance inst;
      inst.features = gaussian_vec(rng, feature_dim, 1.0);
      inst.label = inst.features.dot(theta_k) + observation_noise * rng.gaussian();
      shard.instances.push_back(std::move(inst));
    }
    shards.push_back(std::move(shard));
  }
  return shards;
}

Dataset generate_class_blobs(std::uint64_t seed, int instances, int feature_dim,
                             int num_classes, double class_sep) {
  if (instances < 1 || feature_dim < 1 || num_classes < 2) {
    throw std::invalid_argument("generate_class_blobs: need instances >= 1, feature_dim >= 1, "
                                "num_classes >= 2");
  }
  Rng rng(seed);

  // Class means drawn in the middle of [0,1]^m, per-class spread chosen so a
  // separation of ~3 keeps most mass inside the unit box after clamping.
  const double spread = 0.5 / (1.0 + class_sep);
  std::vector<Eigen::VectorXd> means;
  means.reserve(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    Eigen::VectorXd mu(feature_dim);
    for (int i = 0; i < feature_dim; ++i) mu[i] = 0.2 + 0.6 * rng.uniform();
    means.push_back(std::move(mu));
  }

  Dataset out;
  out.feature_dim = feature_dim;
  out.num_classes = num_classes;
  out.instances.reserve(static_cast<std::size_t>(instances));
  for (int i = 0; i < instances; ++i) {
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes)));
    Instance inst;
    inst.features = means[static_cast<std::size_t>(c)] + gaussian_vec(rng, feature_dim, spread);
    inst.features = inst.features.cwiseMax(0.0).cwiseMin(1.0);
    inst.label = c;
    out.instances.push_back(std::move(inst));
  }
  return out;
}

std::vector<ClientShard> shard_by_label_skew(const Dataset& dataset, int clients,
                                             int classes_per_client, std::uint64_t seed) {
  if (classes_per_client < 1) {
    throw std::invalid_argument("shard_by_label_skew: classes_per_client must be >= 1");
  }
  if (dataset.instances.empty()) {
    throw std::invalid_argument("shard_by_label_skew: dataset is empty");
  }
  if (classes_per_client > dataset.num_classes) {
    throw std::invalid_argument("shard_by_label_skew: classes_per_client exceeds the dataset's "
                                "class count");
  }
  if (clients < 1) {
    throw std::invalid_argument("shard_by_label_skew: clients must be >= 1");
  }

  Rng rng(seed);

  // Which classes actually have instances.
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(dataset.num_classes));
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    const int label = static_cast<int>(dataset.instances[i].label);
    if (label < 0 || label >= dataset.num_classes) {
      throw std::invalid_argument("shard_by_label_skew: label outside [0, num_classes)");
    }
    by_class[static_cast<std::size_t>(label)].push_back(static_cast<int>(i));
  }
  std::vector<int> populated;
  for (int c = 0; c < dataset.num_classes; ++c) {
    if (!by_class[static_cast<std::size_t>(c)].empty()) populated.push_back(c);
  }

  // Class subsets first: every client samples classes_per_client distinct
  // classes (fewer only if the dataset lacks that many populated classes).
  const int per_client = std::min<int>(classes_per_client, static_cast<int>(populated.size()));
  std::vector<std::vector<int>> holders(static_cast<std::size_t>(dataset.num_classes));
  std::vector<std::vector<int>> client_classes(static_cast<std::size_t>(clients));
  for (int k = 0; k < clients; ++k) {
    std::vector<int> pool = populated;
    rng.shuffle(pool);
    pool.resize(static_cast<std::size_t>(per_client));
    std::sort(pool.begin(), pool.end());
    for (int c : pool) holders[static_cast<std::size_t>(c)].push_back(k);
    client_classes[static_cast<std::size_t>(k)] = std::move(pool);
  }

  // Then split each class's instances uniformly among its holders.
  std::vector<ClientShard> shards(static_cast<std::size_t>(clients));
  for (int k = 0; k < clients; ++k) shards[static_cast<std::size_t>(k)].client_id = k;
  for (int c = 0; c < dataset.num_classes; ++c) {
    auto& owners = holders[static_cast<std::size_t>(c)];
    if (owners.empty()) continue;
    auto idx = by_class[static_cast<std::size_t>(c)];
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int owner = owners[i % owners.size()];
      shards[static_cast<std::size_t>(owner)].instances.push_back(
          dataset.instances[static_cast<std::size_t>(idx[i])]);
    }
  }

  for (const auto& shard : shards) {
    if (shard.instances.empty()) {
      throw std::runtime_error("shard_by_label_skew: a client received no instances; the "
                               "dataset is too small for this partition");
    }
  }
  return shards;
}

std::vector<ClientShard> shard_uniform(const Dataset& dataset, int clients,
                                       std::uint64_t seed) {
  if (clients < 1 || dataset.instances.size() < static_cast<std::size_t>(clients)) {
    throw std::invalid_argument("shard_uniform: need at least one instance per client");
  }
  std::vector<int> idx(dataset.instances.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);

  std::vector<ClientShard> shards(static_cast<std::size_t>(clients));
  for (int k = 0; k < clients; ++k) shards[static_cast<std::size_t>(k)].client_id = k;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    shards[i % static_cast<std::size_t>(clients)].instances.push_back(
        dataset.instances[static_cast<std::size_t>(idx[i])]);
  }
  return shards;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("split_train_test: test_fraction must be in [0, 1)");
  }
  std::vector<int> idx(dataset.instances.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);

  const auto test_count =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
  Dataset train{{}, dataset.feature_dim, dataset.num_classes};
  Dataset test{{}, dataset.feature_dim, dataset.num_classes};
  test.instances.reserve(test_count);
  train.instances.reserve(idx.size() - test_count);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto& dst = (i < test_count) ? test : train;
    dst.instances.push_back(dataset.instances[static_cast<std::size_t>(idx[i])]);
  }
  return {std::move(train), std::move(test)};
}

void write_text_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("write_text_dataset: cannot open " + path.string());
  }
  out.precision(17);
  for (const auto& inst : dataset.instances) {
    out << inst.label;
    for (int i = 0; i < inst.features.size(); ++i) out << ',' << inst.features[i];
    out << '\n';
  }
}

Dataset read_text_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_text_dataset: cannot open " + path.string());
  }
  Dataset out;
  std::string line;
  int line_no = 0;
  bool integral_labels = true;
  double max_label = -1.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(ss, field, ',')) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw std::runtime_error("read_text_dataset: bad number at " + path.string() + ":" +
                                 std::to_string(line_no));
      }
    }
    if (values.size() < 2) {
      throw std::runtime_error("read_text_dataset: line " + std::to_string(line_no) +
                               " needs a label and at least one feature");
    }
    Instance inst;
    inst.label = values[0];
    inst.features = Eigen::Map<Eigen::VectorXd>(values.data() + 1,
                                                static_cast<Eigen::Index>(values.size() - 1));
    if (out.feature_dim == 0) {
      out.feature_dim = static_cast<int>(inst.features.size());
    } else if (out.feature_dim != static_cast<int>(inst.features.size())) {
      throw std::runtime_error("read_text_dataset: inconsistent feature count at line " +
                               std::to_string(line_no));
    }
    integral_labels = integral_labels && inst.label == std::floor(inst.label) && inst.label >= 0;
    max_label = std::max(max_label, inst.label);
    out.instances.push_back(std::move(inst));
  }
  out.num_classes = integral_labels ? static_cast<int>(max_label) + 1 : 0;
  return out;
}

Dataset load_idx_dataset(const std::filesystem::path& images,
                         const std::filesystem::path& labels) {
  const IdxTensor img = read_idx_file(images);
  const IdxTensor lab = read_idx_file(labels);
  if (img.shape.size() < 2) {
    throw std::runtime_error("load_idx_dataset: image tensor needs at least two dimensions");
  }
  if (lab.shape.size() != 1) {
    throw std::runtime_error("load_idx_dataset: label tensor must be one-dimensional");
  }
  const std::size_t n = img.shape[0];
  if (lab.shape[0] != n) {
    throw std::runtime_error("load_idx_dataset: image and label counts differ");
  }
  std::size_t per_instance = 1;
  for (std::size_t i = 1; i < img.shape.size(); ++i) per_instance *= img.shape[i];

  Dataset out;
  out.feature_dim = static_cast<int>(per_instance);
  int max_label = 0;
  out.instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Instance inst;
    inst.features.resize(static_cast<Eigen::Index>(per_instance));
    for (std::size_t j = 0; j < per_instance; ++j) {
      inst.features[static_cast<Eigen::Index>(j)] =
          static_cast<double>(img.data[i * per_instance + j]) / 255.0;
    }
    inst.label = static_cast<double>(lab.data[i]);
    max_label = std::max(max_label, static_cast<int>(inst.label));
    out.instances.push_back(std::move(inst));
  }
  out.num_classes = max_label + 1;
  return out;
}

void write_idx_dataset(const Dataset& dataset, const std::filesystem::path& images,
                       const std::filesystem::path& labels) {
  const std::size_t n = dataset.instances.size();
  IdxTensor img;
  img.shape = {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(dataset.feature_dim)};
  img.data.reserve(n * static_cast<std::size_t>(dataset.feature_dim));
  IdxTensor lab;
  lab.shape = {static_cast<std::uint32_t>(n)};
  lab.data.reserve(n);
  for (const auto& inst : dataset.instances) {
    if (inst.features.size() != dataset.feature_dim) {
      throw std::invalid_argument("write_idx_dataset: inconsistent feature dimension");
    }
    for (int j = 0; j < dataset.feature_dim; ++j) {
      const double clamped = std::clamp(inst.features[j], 0.0, 1.0);
      img.data.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0)));
    }
    lab.data.push_back(static_cast<std::uint8_t>(inst.label));
  }
  write_idx_file(img, images);
  write_idx_file(lab, labels);
}

}  // namespace otafl
