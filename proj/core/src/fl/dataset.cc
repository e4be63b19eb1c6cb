#include "gcs/fl/dataset.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <span>
#include <sstream>

#include "gcs/errors.h"
#include "gcs/rng.h"

namespace gcs::fl {
namespace {

Dataset sample_mixture(const RowMatrix& means, std::size_t n, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset out;
  out.num_classes = static_cast<int>(means.rows());
  out.features.resize(static_cast<Eigen::Index>(n), means.cols());
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(means.rows()));
    out.labels[i] = label;
    for (Eigen::Index d = 0; d < means.cols(); ++d) {
      out.features(static_cast<Eigen::Index>(i), d) = means(label, d) + noise(rng);
    }
  }
  return out;
}

Dataset take_rows(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.num_classes = data.num_classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        data.features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels[i] = data.labels[rows[i]];
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw DataError("line " + std::to_string(line) + ": bad number '" +
                    std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    out.push_back(s.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

TrainValidation make_gaussian_mixture(const MixtureSpec& spec,
                                      std::uint64_t seed) {
  if (spec.dimension == 0 || spec.num_classes < 2 || spec.train_samples == 0 ||
      spec.validation_samples == 0) {
    throw ConfigError("mixture needs dimension >= 1, >= 2 classes, samples > 0");
  }
  Rng mean_rng = make_rng(seed, "mixture-means");
  std::normal_distribution<double> draw(0.0, spec.separation);
  RowMatrix means(spec.num_classes, static_cast<Eigen::Index>(spec.dimension));
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    for (Eigen::Index d = 0; d < means.cols(); ++d) means(c, d) = draw(mean_rng);
  }
  Rng train_rng = make_rng(seed, "mixture-train");
  Rng valid_rng = make_rng(seed, "mixture-validation");
  return {sample_mixture(means, spec.train_samples, train_rng),
          sample_mixture(means, spec.validation_samples, valid_rng)};
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header");
  const auto header = split_commas(line);
  if (header.size() < 2 || header.back() != "label") {
    throw DataError(path + ": header must be f0,...,f{D-1},label");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[d] != "f" + std::to_string(d)) {
      throw DataError(path + ": header column " + std::to_string(d) +
                      " must be f" + std::to_string(d));
    }
  }
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != dim + 1) {
      throw DataError(path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields");
    }
    for (std::size_t d = 0; d < dim; ++d) {
      values.push_back(parse_double(fields[d], line_no));
    }
    const double label = parse_double(fields[dim], line_no);
    if (label < 0 || label != static_cast<int>(label)) {
      throw DataError(path + ": line " + std::to_string(line_no) +
                      ": label must be a non-negative integer");
    }
    labels.push_back(static_cast<int>(label));
  }
  if (labels.empty()) throw DataError(path + ": no samples");
  Dataset out;
  out.labels = std::move(labels);
  out.features = Eigen::Map<RowMatrix>(values.data(),
                                       static_cast<Eigen::Index>(out.labels.size()),
                                       static_cast<Eigen::Index>(dim));
  out.num_classes = *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  return out;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file " + path);
  for (std::size_t d = 0; d < data.dimension(); ++d) out << 'f' << d << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t d = 0; d < data.dimension(); ++d) {
      out << data.features(static_cast<Eigen::Index>(i),
                           static_cast<Eigen::Index>(d))
          << ',';
    }
    out << data.labels[i] << '\n';
  }
}

TrainValidation split_dataset(const Dataset& data, double validation_fraction,
                              std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, "dataset-split");
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_valid = static_cast<std::size_t>(
      std::max(1.0, validation_fraction * static_cast<double>(data.size())));
  if (n_valid >= data.size()) throw DataError("dataset too small to split");
  const std::span<const std::size_t> all(order);
  return {take_rows(data, all.first(data.size() - n_valid)),
          take_rows(data, all.last(n_valid))};
}

}  // namespace gcs::fl
