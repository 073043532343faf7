#include "pnl/memory.hpp"

#include <string>

namespace pnl {

PrototypeBank::PrototypeBank(const Mat& centroids) : centroids_(centroids.rows(), centroids.cols()) {
  for (Index k = 0; k < centroids.cols(); ++k) {
    centroids_.col(k) = l2_normalize(centroids.col(k));
  }
}

PrototypeBank PrototypeBank::restore(Mat centroids) {
  PrototypeBank bank;
  bank.centroids_ = std::move(centroids);
  return bank;
}

void PrototypeBank::check_label(Index label) const {
  if (label < 0 || label >= num_classes()) {
    throw LabelRangeError("prototype label " + std::to_string(label) + " outside [0," +
                          std::to_string(num_classes()) + ")");
  }
}

Vec PrototypeBank::prototype(Index k) const {
  check_label(k);
  return centroids_.col(k);
}

Vec PrototypeBank::scores(const Vec& q, double tau) const {
  if (q.size() != dim()) throw ShapeError("prototype scores: feature dimension mismatch");
  return softmax_temp(Vec(centroids_.transpose() * q), tau);
}

void PrototypeBank::update(Index label, const Vec& q, double m) {
  check_label(label);
  if (q.size() != dim()) throw ShapeError("prototype update: feature dimension mismatch");
  if (!(m >= 0.0 && m <= 1.0)) throw InvalidHyperparameter("prototype momentum outside [0,1]");
  Vec mixed = m * centroids_.col(label) + (1.0 - m) * q;
  centroids_.col(label) = l2_normalize(mixed);
}

PrototypeBank init_prototypes(const std::vector<Vec>& features, const std::vector<Index>& labels,
                              Index num_classes, std::mt19937_64& rng) {
  if (features.size() != labels.size()) throw ShapeError("init_prototypes: size mismatch");
  if (features.empty()) throw EmptyInput("init_prototypes: no features");
  const Index d = features.front().size();
  Mat sums = Mat::Zero(d, num_classes);
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Index y = labels[i];
    if (y < 0 || y >= num_classes) throw LabelRangeError("init_prototypes: label out of range");
    sums.col(y) += features[i];
    ++counts[static_cast<std::size_t>(y)];
  }
  for (Index k = 0; k < num_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0 || sums.col(k).squaredNorm() == 0.0) {
      Vec r(d);
      for (Index j = 0; j < d; ++j) r(j) = std::normal_distribution<double>(0.0, 1.0)(rng);
      sums.col(k) = r;
    }
  }
  return PrototypeBank(sums);
}

void LabelQueue::push(Vec key, Index label) {
  if (capacity_ == 0) return;
  while (entries_.size() >= capacity_) entries_.pop_front();
  entries_.push_back({std::move(key), label});
}

Mat LabelQueue::keys() const {
  if (entries_.empty()) return Mat();
  Mat out(entries_.front().key.size(), static_cast<Index>(entries_.size()));
  Index c = 0;
  for (const auto& e : entries_) out.col(c++) = e.key;
  return out;
}

ContrastSets partition(const LabelQueue& queue, Index label, const Vec& self_key) {
  const Index d = self_key.size();
  Index n_pos = 1;
  for (const auto& e : queue.entries()) {
    if (e.key.size() != d) throw ShapeError("partition: queue key dimension mismatch");
    if (e.label == label) ++n_pos;
  }
  const Index n_neg = static_cast<Index>(queue.size()) - (n_pos - 1);
  ContrastSets sets{Mat(d, n_pos), Mat(d, n_neg)};
  sets.positives.col(0) = self_key;
  Index p = 1, n = 0;
  for (const auto& e : queue.entries()) {
    if (e.label == label) {
      sets.positives.col(p++) = e.key;
    } else {
      sets.negatives.col(n++) = e.key;
    }
  }
  return sets;
}

}  // namespace pnl
