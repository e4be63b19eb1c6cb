#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gcs::fl {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Feature rows with integer class labels in [0, num_classes).
struct Dataset {
  RowMatrix features;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dimension() const {
    return static_cast<std::size_t>(features.cols());
  }
};

struct MixtureSpec {
  std::size_t dimension = 16;
  int num_classes = 4;
  std::size_t train_samples = 4000;
  std::size_t validation_samples = 1000;
  // Class means are drawn from N(0, separation^2 I); samples add N(0, I).
  double separation = 0.6;
};

struct TrainValidation {
  Dataset train;
  Dataset validation;
};

// Labels cycle through the classes so both splits are balanced.
TrainValidation make_gaussian_mixture(const MixtureSpec& spec,
                                      std::uint64_t seed);

// Reads a comma-separated table with header f0,...,f{D-1},label.
// Throws DataError on malformed input.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& data, const std::string& path);

// Deterministic split of a loaded table: the last `validation_fraction` of a
// seeded shuffle becomes the validation set.
TrainValidation split_dataset(const Dataset& data, double validation_fraction,
                              std::uint64_t seed);

}  // namespace gcs::fl
