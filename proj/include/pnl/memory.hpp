#ifndef PNL_MEMORY_HPP_
#define PNL_MEMORY_HPP_

#include <cstddef>
#include <deque>
#include <random>
#include <vector>

#include "pnl/numerics.hpp"

namespace pnl {

/// K unit-norm class centroids, stored as the columns of a d x K matrix.
class PrototypeBank {
 public:
  PrototypeBank() = default;
  /// Columns are normalized on construction.
  explicit PrototypeBank(const Mat& centroids);
  /// Adopts stored centroids verbatim (checkpoint restore).
  static PrototypeBank restore(Mat centroids);

  Index num_classes() const { return centroids_.cols(); }
  Index dim() const { return centroids_.rows(); }
  const Mat& centroids() const { return centroids_; }
  Vec prototype(Index k) const;

  /// Softmax over q . c_k / tau.
  Vec scores(const Vec& q, double tau) const;

  /// c <- normalize(m c + (1 - m) q) for the prototype of `label` only.
  void update(Index label, const Vec& q, double m);

 private:
  void check_label(Index label) const;

  Mat centroids_;
};

/// Per-class normalized feature mean; classes without any member get a random
/// unit vector drawn from `rng`.
PrototypeBank init_prototypes(const std::vector<Vec>& features, const std::vector<Index>& labels,
                              Index num_classes, std::mt19937_64& rng);

struct QueueEntry {
  Vec key;
  Index label;
};

/// Bounded FIFO of (key feature, label) pairs; the oldest entry is evicted
/// when a push would exceed capacity.
class LabelQueue {
 public:
  LabelQueue() = default;
  explicit LabelQueue(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<QueueEntry>& entries() const { return entries_; }

  void push(Vec key, Index label);

  /// All stored keys as columns (oldest first).
  Mat keys() const;

 private:
  std::size_t capacity_ = 0;
  std::deque<QueueEntry> entries_;
};

/// Keys as columns of d x n matrices.
struct ContrastSets {
  Mat positives;
  Mat negatives;
};

/// Positives are the stored keys labelled `label` plus `self_key` (first
/// column); negatives are every other stored key.
ContrastSets partition(const LabelQueue& queue, Index label, const Vec& self_key);

}  // namespace pnl

#endif  // PNL_MEMORY_HPP_
