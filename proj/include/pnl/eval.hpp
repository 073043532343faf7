#ifndef PNL_EVAL_HPP_
#define PNL_EVAL_HPP_

#include <cstdint>
#include <vector>

#include "pnl/encoder.hpp"
#include "pnl/synthdata.hpp"

namespace pnl {

/// One query's gallery, ordered by descending similarity.
struct RankedRetrieval {
  Index query = 0;
  std::vector<Index> gallery;  // gallery item ids, best first
  std::vector<bool> relevant;  // relevance of each ranked item
};

/// Every other feature is the gallery of each query; relevance is identity
/// equality. Similarity ties keep the lower gallery index first.
std::vector<RankedRetrieval> rank_all(const std::vector<Vec>& features,
                                      const std::vector<Index>& identity);

/// Rank a gallery for a single query by the given similarity scores.
RankedRetrieval rank_by_score(Index query, const std::vector<double>& scores,
                              const std::vector<bool>& relevant);

double average_precision(const RankedRetrieval& r);
double mean_average_precision(const std::vector<RankedRetrieval>& queries);
double cmc_top_k(const std::vector<RankedRetrieval>& queries, std::size_t k);

struct RetrievalMetrics {
  double map = 0.0;
  double cmc1 = 0.0;
};

RetrievalMetrics evaluate_retrieval(const EncoderParams& encoder, const Observations& probe);

struct CorrectionStats {
  double agreement = 0.0;         // pairwise same/different agreement with ground truth
  double noise1_recovery = 0.0;   // split pairs (same person, different raw label) re-joined
  double noise2_recovery = 0.0;   // merged pairs (different people, same raw label) separated
  std::size_t corrupted_samples = 0;
};

/// Pairwise agreement of `labels` with ground truth over the samples whose
/// identity is touched by a planted event. A recovery rate is 1 when the
/// corresponding noise type is absent.
CorrectionStats correction_accuracy(const std::vector<Index>& labels, const Dataset& dataset,
                                    const NoiseRecord* record);

enum class SplitMode { SmallScale, FewShot };
enum class SplitRounding { Ceil, Floor };

struct SplitSpec {
  SplitMode mode = SplitMode::SmallScale;
  double fraction = 1.0;
  SplitRounding rounding = SplitRounding::Ceil;

  std::string describe() const;
};

/// Small-scale keeps a fraction of the labels (all their samples); few-shot
/// keeps every label with a fraction of its samples (at least one). Kept
/// labels are re-indexed densely; the choice is nested across fractions for a
/// fixed seed.
Dataset make_split(const Dataset& dataset, const SplitSpec& spec, std::uint64_t seed);

}  // namespace pnl

#endif  // PNL_EVAL_HPP_
