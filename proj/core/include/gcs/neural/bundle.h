#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gcs/model/types.h"

namespace gcs::neural {

// Device tokens are 0..J-1, EOS is J, PAD is J+1. PAD never appears as a
// target and is masked at generation time.
struct Vocabulary {
  std::size_t devices = 0;

  std::size_t size() const { return devices + 2; }
  int eos() const { return static_cast<int>(devices); }
  int pad() const { return static_cast<int>(devices) + 1; }
};

struct ModelSizes {
  std::size_t devices = 0;
  std::size_t embedding = 32;
  std::size_t hidden = 64;            // encoder and decoder LSTM width (d)
  std::size_t evaluator_hidden = 200;

  Vocabulary vocab() const { return Vocabulary{devices}; }
};

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
struct LstmParamsT {
  Mat<S> input_weight;      // 4H x E, gate blocks i, f, g, o
  Mat<S> recurrent_weight;  // 4H x H
  Mat<S> bias;              // 4H x 1
};

// Every trainable array of the encoder-evaluator-decoder. Inference and
// checkpoints use double; training may run on a float copy.
template <typename S>
struct ParamSetT {
  Mat<S> embedding;  // E x |V|, one column per token
  LstmParamsT<S> encoder;
  LstmParamsT<S> decoder;
  Mat<S> output_weight;  // |V| x 2H, maps [h_dec; context]
  Mat<S> eval_w1;        // F x H
  Mat<S> eval_b1;        // F x 1
  Mat<S> eval_w2;        // 1 x F
  Mat<S> eval_b2;        // 1 x 1

  static ParamSetT zeros(const ModelSizes& s) {
    const auto v = static_cast<Eigen::Index>(s.vocab().size());
    const auto e = static_cast<Eigen::Index>(s.embedding);
    const auto h = static_cast<Eigen::Index>(s.hidden);
    const auto f = static_cast<Eigen::Index>(s.evaluator_hidden);
    ParamSetT p;
    p.embedding = Mat<S>::Zero(e, v);
    for (LstmParamsT<S>* l : {&p.encoder, &p.decoder}) {
      l->input_weight = Mat<S>::Zero(4 * h, e);
      l->recurrent_weight = Mat<S>::Zero(4 * h, h);
      l->bias = Mat<S>::Zero(4 * h, 1);
    }
    p.output_weight = Mat<S>::Zero(v, 2 * h);
    p.eval_w1 = Mat<S>::Zero(f, h);
    p.eval_b1 = Mat<S>::Zero(f, 1);
    p.eval_w2 = Mat<S>::Zero(1, f);
    p.eval_b2 = Mat<S>::Zero(1, 1);
    return p;
  }

  // Named views in a fixed order; names are the checkpoint keys.
  std::vector<std::pair<std::string_view, Mat<S>*>> entries() {
    return {{"embedding", &embedding},
            {"encoder.input_weight", &encoder.input_weight},
            {"encoder.recurrent_weight", &encoder.recurrent_weight},
            {"encoder.bias", &encoder.bias},
            {"decoder.input_weight", &decoder.input_weight},
            {"decoder.recurrent_weight", &decoder.recurrent_weight},
            {"decoder.bias", &decoder.bias},
            {"decoder.output_weight", &output_weight},
            {"evaluator.w1", &eval_w1},
            {"evaluator.b1", &eval_b1},
            {"evaluator.w2", &eval_w2},
            {"evaluator.b2", &eval_b2}};
  }
  std::vector<std::pair<std::string_view, const Mat<S>*>> entries() const {
    std::vector<std::pair<std::string_view, const Mat<S>*>> out;
    for (auto [name, m] : const_cast<ParamSetT*>(this)->entries()) out.emplace_back(name, m);
    return out;
  }

  void set_zero() {
    for (auto [name, m] : entries()) m->setZero();
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto [name, m] : entries()) n += static_cast<std::size_t>(m->size());
    return n;
  }
  bool all_finite() const {
    for (auto [name, m] : entries()) {
      if (!m->allFinite()) return false;
    }
    return true;
  }
};

using LstmParams = LstmParamsT<double>;
using ParamSet = ParamSetT<double>;
using ParamSetF = ParamSetT<float>;

// Element-wise conversion into `out`, reusing its storage.
template <typename To, typename From>
void cast_params(const ParamSetT<From>& in, ParamSetT<To>& out) {
  auto src = in.entries();
  auto dst = out.entries();
  for (std::size_t k = 0; k < src.size(); ++k) {
    *dst[k].second = src[k].second->template cast<To>();
  }
}

// Min-max bounds used to map raw comprehensive scores onto [0, 1].
struct Normalization {
  double min = 0.0;
  double max = 1.0;

  bool degenerate() const { return !(max > min); }
  double normalize(double score) const {
    return degenerate() ? 0.5 : (score - min) / (max - min);
  }
};

struct ModelBundle {
  ModelSizes sizes;
  ParamSet params;
  ParamSet grads;
  Normalization normalization;
  std::uint64_t seed = 0;

  // Glorot-uniform matrices, zero biases.
  static ModelBundle initialized(const ModelSizes& sizes, std::uint64_t seed);

  Vocabulary vocab() const { return sizes.vocab(); }
};

// T x d matrix whose row t is the encoder output after token t.
struct LatentRep {
  Eigen::MatrixXd rows;

  std::size_t length() const { return static_cast<std::size_t>(rows.rows()); }
};

}  // namespace gcs::neural
