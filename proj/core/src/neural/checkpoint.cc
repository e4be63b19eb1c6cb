#include "gcs/neural/checkpoint.h"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gcs/errors.h"

namespace gcs::neural {

using nlohmann::ordered_json;

void save_checkpoint(std::ostream& out, const ModelBundle& bundle,
                     const std::map<std::string, std::string>& tags) {
  ordered_json manifest;
  manifest["vocab_size"] = bundle.vocab().size();
  manifest["devices"] = bundle.sizes.devices;
  manifest["embedding"] = bundle.sizes.embedding;
  manifest["encoder_hidden"] = bundle.sizes.hidden;
  manifest["decoder_hidden"] = bundle.sizes.hidden;
  manifest["evaluator_hidden"] = bundle.sizes.evaluator_hidden;
  manifest["normalization"] = {{"min", bundle.normalization.min},
                               {"max", bundle.normalization.max}};
  manifest["seed"] = bundle.seed;
  manifest["tags"] = tags;

  ordered_json params = ordered_json::object();
  for (auto [name, m] : bundle.params.entries()) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m->size()));
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) data.push_back((*m)(i, j));
    }
    params[std::string(name)] = {{"rows", m->rows()}, {"cols", m->cols()},
                                 {"data", std::move(data)}};
  }
  ordered_json doc;
  doc["format"] = "gcs-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["manifest"] = std::move(manifest);
  doc["params"] = std::move(params);
  out << doc.dump() << '\n';
}

LoadedCheckpoint load_checkpoint(std::istream& in) {
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.at("format").get<std::string>() != "gcs-checkpoint") {
      throw DataError("not a gcs checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " +
                      std::to_string(doc.at("version").get<int>()));
    }
    const auto& m = doc.at("manifest");
    if (m.at("encoder_hidden") != m.at("decoder_hidden")) {
      throw DataError("checkpoint: encoder and decoder widths must match");
    }
    ModelSizes sizes{m.at("devices").get<std::size_t>(),
                     m.at("embedding").get<std::size_t>(),
                     m.at("encoder_hidden").get<std::size_t>(),
                     m.at("evaluator_hidden").get<std::size_t>()};
    if (m.at("vocab_size").get<std::size_t>() != sizes.vocab().size()) {
      throw DataError("checkpoint: vocab_size disagrees with device count");
    }
    LoadedCheckpoint out;
    out.bundle.sizes = sizes;
    out.bundle.params = ParamSet::zeros(sizes);
    out.bundle.grads = ParamSet::zeros(sizes);
    out.bundle.normalization = {m.at("normalization").at("min").get<double>(),
                                m.at("normalization").at("max").get<double>()};
    out.bundle.seed = m.at("seed").get<std::uint64_t>();
    out.tags = m.at("tags").get<std::map<std::string, std::string>>();
    const auto& params = doc.at("params");
    for (auto [name, mat] : out.bundle.params.entries()) {
      const auto& p = params.at(std::string(name));
      if (p.at("rows").get<Eigen::Index>() != mat->rows() ||
          p.at("cols").get<Eigen::Index>() != mat->cols()) {
        throw DataError("checkpoint: shape mismatch for " + std::string(name));
      }
      const auto data = p.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != mat->size()) {
        throw DataError("checkpoint: wrong element count for " + std::string(name));
      }
      std::size_t k = 0;
      for (Eigen::Index i = 0; i < mat->rows(); ++i) {
        for (Eigen::Index j = 0; j < mat->cols(); ++j) (*mat)(i, j) = data[k++];
      }
    }
    if (params.size() != out.bundle.params.entries().size()) {
      throw DataError("checkpoint: unexpected parameter arrays");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint_file(const std::string& path, const ModelBundle& bundle,
                          const std::map<std::string, std::string>& tags) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path);
  save_checkpoint(out, bundle, tags);
}

LoadedCheckpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace gcs::neural
