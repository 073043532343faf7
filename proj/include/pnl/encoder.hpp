#ifndef PNL_ENCODER_HPP_
#define PNL_ENCODER_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "pnl/numerics.hpp"

namespace pnl {

/// Affine map `weight * x + bias`; weight is out x in.
struct DenseLayer {
  Mat weight;
  Vec bias;
};

/// Feed-forward encoder: tanh on every hidden layer, linear output layer,
/// then L2 normalization of the output.
struct EncoderParams {
  std::vector<DenseLayer> layers;
  /// Bumped on every in-place mutation so stale activation caches are caught.
  std::uint64_t revision = 0;

  Index in_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  Index out_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
  void validate() const;
};

/// Linear classifier head over features; softmax is applied by `classify`.
struct ClassifierParams {
  Mat weight;  // K x d
  Vec bias;    // K

  Index num_classes() const { return weight.rows(); }
};

/// The trainable query-side network: encoder followed by classifier.
struct QueryNetwork {
  EncoderParams encoder;
  ClassifierParams head;
};

/// Gradient (or velocity) buffers shaped like a QueryNetwork.
struct NetworkGrads {
  std::vector<DenseLayer> encoder;
  DenseLayer head;

  static NetworkGrads zeros_like(const QueryNetwork& net);
  NetworkGrads& operator+=(const NetworkGrads& other);
  NetworkGrads& operator*=(double s);
};

struct ForwardCache {
  std::uint64_t revision = 0;
  std::vector<Vec> inputs;  // input to each layer
  Vec pre_norm;             // output layer before normalization
  Vec feature;              // unit-norm result
};

struct Encoded {
  Vec feature;
  ForwardCache cache;
};

struct Backprop {
  NetworkGrads grads;
  Vec input_grad;
};

/// Layer widths from input to feature, e.g. {D, 32, 32, d} is two hidden
/// layers. Weights are uniform in +-1/sqrt(fan_in).
EncoderParams make_encoder(const std::vector<Index>& widths, std::mt19937_64& rng);
ClassifierParams make_classifier(Index num_classes, Index feature_dim, std::mt19937_64& rng);

Encoded forward(const EncoderParams& params, const Vec& x);
/// Feature only, no cache.
Vec encode(const EncoderParams& params, const Vec& x);

Vec class_logits(const ClassifierParams& head, const Vec& feature);
Vec classify(const ClassifierParams& head, const Vec& feature);

/// Backpropagates an upstream gradient on the feature and on the classifier
/// logits through the head, the L2 normalization, and every layer.
Backprop backward(const QueryNetwork& net, const ForwardCache& cache, const Vec& grad_feature,
                  const Vec& grad_logits);

struct OptimizerState {
  NetworkGrads velocity;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  static OptimizerState for_network(const QueryNetwork& net, double lr, double momentum,
                                    double weight_decay);
};

/// Classical momentum with coupled weight decay:
///   v <- mu v + g + wd theta;  theta <- theta - lr v
void sgd_step(QueryNetwork& net, const NetworkGrads& grads, OptimizerState& opt);

/// theta_k <- m theta_k + (1 - m) theta_q for every scalar.
void ema_update(EncoderParams& key, const EncoderParams& query, double m);

/// Flat parameter vector (encoder layers in order, then head) and its inverse.
Vec flatten(const QueryNetwork& net);
void unflatten(QueryNetwork& net, const Vec& theta);
Vec flatten(const NetworkGrads& grads);

}  // namespace pnl

#endif  // PNL_ENCODER_HPP_
