#include "pnl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pnl/text_io.hpp"

namespace pnl {

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (epochs < 0) fail("train.epochs", "must be >= 0");
  if (rectify_start < 0) fail("train.rectify_start", "must be >= 0");
  if (lgc_start < 0) fail("train.lgc_start", "must be >= 0");
  if (batch_size < 1) fail("train.batch_size", "must be >= 1");
  if (!(lr >= 0.0)) fail("train.lr", "must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("train.lr_decay", "must be in (0,1]");
  if (lr_decay_interval < 1) fail("train.lr_decay_interval", "must be >= 1");
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) fail("train.sgd_momentum", "must be in [0,1)");
  if (!(weight_decay >= 0.0)) fail("train.weight_decay", "must be >= 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) fail("train.momentum", "must be in [0,1]");
  if (!(tau > 0.0)) fail("train.tau", "must be > 0");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("train.threshold", "must be in (0,1)");
  if (!(lambda_pro >= 0.0)) fail("train.lambda_pro", "must be >= 0");
  if (!(lambda_lgc >= 0.0)) fail("train.lambda_lgc", "must be >= 0");
  if (!terms.ce && !terms.ic && !terms.pro && !terms.lgc) fail("train.terms", "no loss term enabled");
  if (feature_dim < 1) fail("train.feature_dim", "must be >= 1");
  for (Index h : hidden) {
    if (h < 1) fail("train.hidden", "widths must be >= 1");
  }
  if (!(augment.noise_scale >= 0.0)) fail("augment.noise_scale", "must be >= 0");
  if (!(augment.dropout >= 0.0 && augment.dropout < 1.0)) fail("augment.dropout", "must be in [0,1)");
}

std::vector<std::string> TrainConfig::warnings() const {
  std::vector<std::string> out;
  if (rectify_start > lgc_start) out.push_back("train.rectify_start exceeds train.lgc_start");
  if (lgc_start > epochs) out.push_back("train.lgc_start exceeds train.epochs");
  if (momentum == 1.0) out.push_back("train.momentum = 1 freezes the key encoder and prototypes");
  return out;
}

double TrainConfig::lr_at(int epoch) const {
  const int decays = std::max(0, epoch - 1) / lr_decay_interval;
  return lr * std::pow(lr_decay, decays);
}

TrainState init_state(const TrainConfig& cfg, const Dataset& dataset) {
  cfg.validate();
  if (dataset.samples.empty()) throw EmptyInput("init_state: empty dataset");
  TrainState state;
  state.rng.seed(cfg.seed);

  std::vector<Index> widths{dataset.dim};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(cfg.feature_dim);
  state.query.encoder = make_encoder(widths, state.rng);
  state.query.head = make_classifier(dataset.num_classes, cfg.feature_dim, state.rng);
  state.key = state.query.encoder;
  state.opt = OptimizerState::for_network(state.query, cfg.lr, cfg.sgd_momentum, cfg.weight_decay);
  state.queue = LabelQueue(cfg.queue_size);

  std::vector<Vec> features;
  std::vector<Index> labels;
  features.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    features.push_back(encode(state.key, s.observation));
    labels.push_back(s.y_raw);
  }
  state.bank = init_prototypes(features, labels, dataset.num_classes, state.rng);
  return state;
}

namespace {

struct PendingUpdate {
  Vec q;
  Vec k;
  Index label;
};

void check_finite(double v, const char* what, long sample, int epoch, std::uint64_t step) {
  if (!std::isfinite(v)) {
    throw DivergenceError(std::string("non-finite ") + what + " loss at sample " +
                              std::to_string(sample) + " (epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(step) + ")",
                          sample, epoch, static_cast<long>(step));
  }
}

}  // namespace

StepResult train_step(TrainState& state, const Dataset& dataset,
                      std::span<const std::size_t> batch, const TrainConfig& cfg, int epoch) {
  if (batch.empty()) throw EmptyInput("train_step: empty batch");
  const LossTerms& terms = cfg.terms;
  const RectifyConfig rect_cfg{cfg.threshold, cfg.rectify_start};
  const bool lgc_live = terms.lgc && epoch >= cfg.lgc_start;
  // Before the label-guided term switches on, instance-wise contrast stands in for it.
  const bool ic_live = terms.ic || (terms.lgc && !lgc_live);
  const LossTerms active{terms.ce, ic_live, terms.pro, lgc_live};
  const Mat queue_keys = state.queue.keys();

  StepResult result;
  result.losses.reserve(batch.size());
  result.labels.reserve(batch.size());
  NetworkGrads grads = NetworkGrads::zeros_like(state.query);
  std::vector<PendingUpdate> pending;
  pending.reserve(batch.size());

  for (std::size_t idx : batch) {
    const Sample& sample = dataset.samples.at(idx);
    const long sample_id = static_cast<long>(idx);
    auto [view_q, view_k] = two_views(sample.observation, cfg.augment, state.rng);
    Encoded enc;
    Vec k;
    try {
      enc = forward(state.query.encoder, view_q);
      k = encode(state.key, view_k);
    } catch (const DegenerateInput& e) {
      throw DivergenceError(std::string(e.what()) + " at sample " + std::to_string(sample_id) +
                                " (epoch " + std::to_string(epoch) + ", step " +
                                std::to_string(state.step) + ")",
                            sample_id, epoch, static_cast<long>(state.step));
    }
    const Vec& q = enc.feature;

    const Vec p = classify(state.query.head, q);
    Index label = sample.y_raw;
    if (cfg.corrects_labels()) {
      const Vec s = state.bank.scores(q, cfg.tau);
      label = rectify(p, s, sample.y_raw, rect_cfg, epoch).label;
    }
    if (label != sample.y_raw) ++result.changed;

    LossBreakdown parts;
    parts.lambda_pro = cfg.lambda_pro;
    parts.lambda_lgc = cfg.lambda_lgc;
    Vec grad_logits = Vec::Zero(p.size());
    Vec grad_q = Vec::Zero(q.size());
    if (active.ce) {
      LossGrad ce = ce_loss(p, label);
      parts.ce = ce.value;
      grad_logits = std::move(ce.grad);
    }
    if (active.pro) {
      LossGrad pro = proto_loss(q, state.bank, label, cfg.tau);
      parts.pro = pro.value;
      grad_q += cfg.lambda_pro * pro.grad;
    }
    if (active.ic) {
      LossGrad ic = inst_contrast_loss(q, k, queue_keys, cfg.tau);
      parts.ic = ic.value;
      grad_q += ic.grad;
    }
    if (active.lgc) {
      const ContrastSets sets = partition(state.queue, label, k);
      LossGrad lgc = label_guided_loss(q, sets.positives, sets.negatives, cfg.tau);
      parts.lgc = lgc.value;
      grad_q += cfg.lambda_lgc * lgc.grad;
    }
    const LossBreakdown combined = total_loss(parts, active);
    check_finite(combined.total, "total", sample_id, epoch, state.step);

    Backprop bp = backward(state.query, enc.cache, grad_q, grad_logits);
    grads += bp.grads;
    result.losses.push_back(combined);
    result.labels.push_back(label);
    pending.push_back({q, std::move(k), label});
  }

  grads *= 1.0 / static_cast<double>(batch.size());
  sgd_step(state.query, grads, state.opt);

  for (auto& u : pending) {
    if (terms.pro) state.bank.update(u.label, u.q, cfg.momentum);
    state.queue.push(std::move(u.k), u.label);
  }
  ema_update(state.key, state.query.encoder, cfg.momentum);
  ++state.step;
  return result;
}

EpochRecord run_epoch(TrainState& state, const Dataset& dataset, const TrainConfig& cfg,
                      std::vector<Index>* labels) {
  const int epoch = state.epoch + 1;
  EpochRecord rec;
  rec.epoch = epoch;
  rec.lr = cfg.lr_at(epoch);
  state.opt.lr = rec.lr;

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), state.rng);
  if (labels) {
    labels->resize(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) (*labels)[i] = dataset.samples[i].y_raw;
  }

  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t len = std::min(cfg.batch_size, order.size() - start);
    const std::span<const std::size_t> batch(order.data() + start, len);
    StepResult step = train_step(state, dataset, batch, cfg, epoch);
    for (std::size_t i = 0; i < len; ++i) {
      const auto& l = step.losses[i];
      rec.ce += l.ce;
      rec.pro += l.pro;
      rec.ic += l.ic;
      rec.lgc += l.lgc;
      rec.total += l.total;
      if (labels) (*labels)[batch[i]] = step.labels[i];
    }
    rec.changed += step.changed;
    ++rec.steps;
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, dataset.size()));
  rec.ce /= n;
  rec.pro /= n;
  rec.ic /= n;
  rec.lgc /= n;
  rec.total /= n;
  state.epoch = epoch;
  return rec;
}

std::vector<EpochRecord> run(TrainState& state, const Dataset& dataset, const TrainConfig& cfg,
                             int until_epoch, const EpochObserver& observer) {
  cfg.validate();
  const int last = until_epoch < 0 ? cfg.epochs : std::min(until_epoch, cfg.epochs);
  std::vector<EpochRecord> history;
  std::vector<Index> labels;
  while (state.epoch < last) {
    EpochRecord rec;
    try {
      rec = run_epoch(state, dataset, cfg, &labels);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " [run aborted in epoch " +
                                std::to_string(state.epoch + 1) + "]",
                            e.sample(), state.epoch + 1, e.step());
    }
    if (observer) observer(state, rec, labels);
    history.push_back(rec);
  }
  return history;
}

RunResult run(const TrainConfig& cfg, const Dataset& dataset, const EpochObserver& observer) {
  RunResult result{{}, init_state(cfg, dataset)};
  result.history = run(result.state, dataset, cfg, -1, observer);
  return result;
}

std::vector<Index> final_labels(const TrainState& state, const Dataset& dataset,
                                const TrainConfig& cfg) {
  std::vector<Index> out;
  out.reserve(dataset.size());
  const RectifyConfig rect_cfg{cfg.threshold, 0};
  for (const auto& s : dataset.samples) {
    if (!cfg.corrects_labels()) {
      out.push_back(s.y_raw);
      continue;
    }
    const Vec q = encode(state.query.encoder, s.observation);
    const Vec p = classify(state.query.head, q);
    const Vec sc = state.bank.scores(q, cfg.tau);
    out.push_back(rectify(p, sc, s.y_raw, rect_cfg, 1).label);
  }
  return out;
}

}  // namespace pnl
