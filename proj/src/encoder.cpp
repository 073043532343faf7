#include "pnl/encoder.hpp"

#include <cmath>
#include <string>

namespace pnl {

namespace {

DenseLayer make_layer(Index in, Index out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  DenseLayer layer{Mat(out, in), Vec(out)};
  for (Index c = 0; c < in; ++c) {
    for (Index r = 0; r < out; ++r) {
      layer.weight(r, c) = std::uniform_real_distribution<double>(-bound, bound)(rng);
    }
  }
  for (Index r = 0; r < out; ++r) {
    layer.bias(r) = std::uniform_real_distribution<double>(-bound, bound)(rng);
  }
  return layer;
}

// Applies fn(param_block, other_block...) to matching blocks of a network and
// gradient-shaped buffers.
template <typename Fn>
void for_each_block(QueryNetwork& net, const NetworkGrads& grads, NetworkGrads& state, Fn&& fn) {
  for (std::size_t i = 0; i < net.encoder.layers.size(); ++i) {
    fn(net.encoder.layers[i].weight, grads.encoder[i].weight, state.encoder[i].weight);
    fn(net.encoder.layers[i].bias, grads.encoder[i].bias, state.encoder[i].bias);
  }
  fn(net.head.weight, grads.head.weight, state.head.weight);
  fn(net.head.bias, grads.head.bias, state.head.bias);
}

void check_grads_shape(const QueryNetwork& net, const NetworkGrads& g, const char* what) {
  if (g.encoder.size() != net.encoder.layers.size()) {
    throw ShapeError(std::string(what) + ": layer count mismatch");
  }
  for (std::size_t i = 0; i < g.encoder.size(); ++i) {
    require_same_size(net.encoder.layers[i].weight, g.encoder[i].weight, what);
    require_same_size(net.encoder.layers[i].bias, g.encoder[i].bias, what);
  }
  require_same_size(net.head.weight, g.head.weight, what);
  require_same_size(net.head.bias, g.head.bias, what);
}

}  // namespace

void EncoderParams::validate() const {
  if (layers.empty()) throw ShapeError("encoder has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.weight.rows()) {
      throw ShapeError("encoder layer " + std::to_string(i) + ": bias/weight mismatch");
    }
    if (i > 0 && l.weight.cols() != layers[i - 1].weight.rows()) {
      throw ShapeError("encoder layer " + std::to_string(i) + ": does not compose with previous");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw DegenerateInput("encoder layer " + std::to_string(i) + ": non-finite parameter");
    }
  }
}

NetworkGrads NetworkGrads::zeros_like(const QueryNetwork& net) {
  NetworkGrads g;
  g.encoder.reserve(net.encoder.layers.size());
  for (const auto& l : net.encoder.layers) {
    g.encoder.push_back({Mat::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
  }
  g.head = {Mat::Zero(net.head.weight.rows(), net.head.weight.cols()),
            Vec::Zero(net.head.bias.size())};
  return g;
}

NetworkGrads& NetworkGrads::operator+=(const NetworkGrads& other) {
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    encoder[i].weight += other.encoder[i].weight;
    encoder[i].bias += other.encoder[i].bias;
  }
  head.weight += other.head.weight;
  head.bias += other.head.bias;
  return *this;
}

NetworkGrads& NetworkGrads::operator*=(double s) {
  for (auto& l : encoder) {
    l.weight *= s;
    l.bias *= s;
  }
  head.weight *= s;
  head.bias *= s;
  return *this;
}

EncoderParams make_encoder(const std::vector<Index>& widths, std::mt19937_64& rng) {
  if (widths.size() < 2) throw ShapeError("make_encoder: need at least input and output widths");
  EncoderParams params;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] <= 0 || widths[i + 1] <= 0) throw ShapeError("make_encoder: widths must be > 0");
    params.layers.push_back(make_layer(widths[i], widths[i + 1], rng));
  }
  return params;
}

ClassifierParams make_classifier(Index num_classes, Index feature_dim, std::mt19937_64& rng) {
  if (num_classes <= 0 || feature_dim <= 0) throw ShapeError("make_classifier: empty shape");
  DenseLayer l = make_layer(feature_dim, num_classes, rng);
  return {std::move(l.weight), std::move(l.bias)};
}

Encoded forward(const EncoderParams& params, const Vec& x) {
  if (params.layers.empty()) throw ShapeError("forward: encoder has no layers");
  if (x.size() != params.in_dim()) {
    throw ShapeError("forward: input has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(params.in_dim()));
  }
  Encoded out;
  out.cache.revision = params.revision;
  out.cache.inputs.reserve(params.layers.size());
  Vec h = x;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& layer = params.layers[i];
    out.cache.inputs.push_back(h);
    Vec z = layer.weight * h + layer.bias;
    h = (i == last) ? z : Vec(z.array().tanh().matrix());
  }
  out.cache.pre_norm = h;
  out.feature = l2_normalize(h);
  out.cache.feature = out.feature;
  return out;
}

Vec encode(const EncoderParams& params, const Vec& x) { return forward(params, x).feature; }

Vec class_logits(const ClassifierParams& head, const Vec& feature) {
  if (feature.size() != head.weight.cols()) {
    throw ShapeError("classify: feature has dimension " + std::to_string(feature.size()) +
                     ", expected " + std::to_string(head.weight.cols()));
  }
  return head.weight * feature + head.bias;
}

Vec classify(const ClassifierParams& head, const Vec& feature) {
  return softmax_temp(class_logits(head, feature), 1.0);
}

Backprop backward(const QueryNetwork& net, const ForwardCache& cache, const Vec& grad_feature,
                  const Vec& grad_logits) {
  const auto& layers = net.encoder.layers;
  if (cache.revision != net.encoder.revision || cache.inputs.size() != layers.size()) {
    throw CacheError("backward: activation cache does not belong to these parameters");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (cache.inputs[i].size() != layers[i].weight.cols()) {
      throw CacheError("backward: cached activation shape mismatch at layer " + std::to_string(i));
    }
  }
  if (grad_feature.size() != net.encoder.out_dim() ||
      grad_logits.size() != net.head.num_classes()) {
    throw ShapeError("backward: upstream gradient shape mismatch");
  }

  Backprop out;
  out.grads = NetworkGrads::zeros_like(net);
  const Vec& f = cache.feature;

  out.grads.head.weight.noalias() = grad_logits * f.transpose();
  out.grads.head.bias = grad_logits;
  const Vec g_feature = grad_feature + net.head.weight.transpose() * grad_logits;

  // d(z/|z|)/dz = (I - f f^T) / |z|
  const double norm = cache.pre_norm.norm();
  Vec delta = (g_feature - f * f.dot(g_feature)) / norm;

  for (std::size_t i = layers.size(); i-- > 0;) {
    const Vec& input = cache.inputs[i];
    out.grads.encoder[i].weight.noalias() = delta * input.transpose();
    out.grads.encoder[i].bias = delta;
    Vec upstream = layers[i].weight.transpose() * delta;
    if (i > 0) {
      // input == tanh(pre-activation of layer i-1)
      delta = upstream.array() * (1.0 - input.array().square());
    } else {
      out.input_grad = std::move(upstream);
    }
  }
  return out;
}

OptimizerState OptimizerState::for_network(const QueryNetwork& net, double lr, double momentum,
                                           double weight_decay) {
  if (!(lr >= 0.0)) throw InvalidHyperparameter("optimizer: lr must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw InvalidHyperparameter("optimizer: momentum must be in [0,1)");
  }
  if (!(weight_decay >= 0.0)) throw InvalidHyperparameter("optimizer: weight_decay must be >= 0");
  return {NetworkGrads::zeros_like(net), lr, momentum, weight_decay};
}

void sgd_step(QueryNetwork& net, const NetworkGrads& grads, OptimizerState& opt) {
  check_grads_shape(net, grads, "sgd_step");
  check_grads_shape(net, opt.velocity, "sgd_step(velocity)");
  if (!flatten(grads).allFinite()) throw DivergenceError("sgd_step: non-finite gradient");
  for_each_block(net, grads, opt.velocity, [&](auto& theta, const auto& g, auto& v) {
    v = opt.momentum * v + g + opt.weight_decay * theta;
    theta -= opt.lr * v;
  });
  ++net.encoder.revision;
}

void ema_update(EncoderParams& key, const EncoderParams& query, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw InvalidHyperparameter("ema_update: momentum outside [0,1]");
  if (key.layers.size() != query.layers.size()) {
    throw ShapeError("ema_update: architectures differ in depth");
  }
  for (std::size_t i = 0; i < key.layers.size(); ++i) {
    require_same_size(key.layers[i].weight, query.layers[i].weight, "ema_update");
    require_same_size(key.layers[i].bias, query.layers[i].bias, "ema_update");
  }
  if (m == 1.0) return;
  for (std::size_t i = 0; i < key.layers.size(); ++i) {
    key.layers[i].weight = m * key.layers[i].weight + (1.0 - m) * query.layers[i].weight;
    key.layers[i].bias = m * key.layers[i].bias + (1.0 - m) * query.layers[i].bias;
  }
  ++key.revision;
}

namespace {

template <typename Layers>
Index flat_size(const Layers& layers, const DenseLayer& head) {
  Index n = head.weight.size() + head.bias.size();
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

template <typename Block>
void put(Vec& out, Index& at, const Block& b) {
  out.segment(at, b.size()) = Eigen::Map<const Vec>(b.data(), b.size());
  at += b.size();
}

template <typename Block>
void take(const Vec& in, Index& at, Block& b) {
  Eigen::Map<Vec>(b.data(), b.size()) = in.segment(at, b.size());
  at += b.size();
}

}  // namespace

Vec flatten(const QueryNetwork& net) {
  DenseLayer head{net.head.weight, net.head.bias};
  Vec out(flat_size(net.encoder.layers, head));
  Index at = 0;
  for (const auto& l : net.encoder.layers) {
    put(out, at, l.weight);
    put(out, at, l.bias);
  }
  put(out, at, head.weight);
  put(out, at, head.bias);
  return out;
}

void unflatten(QueryNetwork& net, const Vec& theta) {
  DenseLayer head{net.head.weight, net.head.bias};
  if (theta.size() != flat_size(net.encoder.layers, head)) {
    throw ShapeError("unflatten: parameter count mismatch");
  }
  Index at = 0;
  for (auto& l : net.encoder.layers) {
    take(theta, at, l.weight);
    take(theta, at, l.bias);
  }
  take(theta, at, net.head.weight);
  take(theta, at, net.head.bias);
  ++net.encoder.revision;
}

Vec flatten(const NetworkGrads& grads) {
  Vec out(flat_size(grads.encoder, grads.head));
  Index at = 0;
  for (const auto& l : grads.encoder) {
    put(out, at, l.weight);
    put(out, at, l.bias);
  }
  put(out, at, grads.head.weight);
  put(out, at, grads.head.bias);
  return out;
}

}  // namespace pnl
