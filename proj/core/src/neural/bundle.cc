#include "gcs/neural/bundle.h"

#include <cmath>
#include <random>

#include "gcs/rng.h"

namespace gcs::neural {
namespace {

void glorot(Eigen::MatrixXd& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  }
}

}  // namespace

ModelBundle ModelBundle::initialized(const ModelSizes& sizes, std::uint64_t seed) {
  ModelBundle b;
  b.sizes = sizes;
  b.seed = seed;
  b.params = ParamSet::zeros(sizes);
  b.grads = ParamSet::zeros(sizes);
  Rng rng = make_rng(seed, "bundle-init");
  for (auto [name, m] : b.params.entries()) {
    if (m->cols() > 1 || name == "evaluator.w2") glorot(*m, rng);
  }
  return b;
}

}  // namespace gcs::neural
