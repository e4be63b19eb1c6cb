#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "gcs/neural/bundle.h"

namespace gcs::neural {

inline constexpr int kCheckpointVersion = 1;

// JSON container:
//   {"format": "gcs-checkpoint", "version": 1,
//    "manifest": {vocab_size, devices, embedding, encoder_hidden,
//                 decoder_hidden, evaluator_hidden, normalization{min,max},
//                 seed, tags{...}},
//    "params": {name: {"rows", "cols", "data": [row-major doubles]}}}
// `tags` carries caller metadata such as producing config hashes.
void save_checkpoint(std::ostream& out, const ModelBundle& bundle,
                     const std::map<std::string, std::string>& tags = {});

struct LoadedCheckpoint {
  ModelBundle bundle;
  std::map<std::string, std::string> tags;
};

// Throws DataError on a malformed container, an unknown version or a shape
// that disagrees with the manifest.
LoadedCheckpoint load_checkpoint(std::istream& in);

void save_checkpoint_file(const std::string& path, const ModelBundle& bundle,
                          const std::map<std::string, std::string>& tags = {});
LoadedCheckpoint load_checkpoint_file(const std::string& path);

}  // namespace gcs::neural
