#ifndef PNL_LOSSES_HPP_
#define PNL_LOSSES_HPP_

#include <array>
#include <string>

#include "pnl/memory.hpp"
#include "pnl/numerics.hpp"

namespace pnl {

/// A loss value and its gradient with respect to one input (the logits for
/// cross-entropy, the query feature for every contrastive term).
struct LossGrad {
  double value = 0.0;
  Vec grad;
};

/// Floor applied to p[y] before taking the log in `ce_loss`.
inline constexpr double kProbabilityFloor = 1e-12;

/// -log p[y]; gradient on the logits is p - onehot(y).
LossGrad ce_loss(const Vec& p, Index label);

/// Prototype contrast: -log softmax(q . c / tau)[label]. Prototypes are
/// constants of the loss (no gradient flows into them).
LossGrad proto_loss(const Vec& q, const PrototypeBank& bank, Index label, double tau);

/// Shared kernel of the instance-wise and label-guided contrastive losses:
///   -(1/|P|) log( sum_P exp(q.k/tau) / (sum_P exp(q.k/tau) + sum_N exp(q.k/tau)) )
/// Keys are columns. `positives` must be non-empty.
LossGrad contrast_loss(const Vec& q, const Mat& positives, const Mat& negatives, double tau);

/// Instance-wise contrast with a single positive key.
LossGrad inst_contrast_loss(const Vec& q, const Vec& k_pos, const Mat& negatives, double tau);

/// Label-guided contrast over the positive/negative sets built by `partition`.
LossGrad label_guided_loss(const Vec& q, const Mat& positives, const Mat& negatives, double tau);

/// Which loss terms participate in the objective.
struct LossTerms {
  bool ce = true;
  bool ic = false;
  bool pro = true;
  bool lgc = true;

  std::string describe() const;
  friend bool operator==(const LossTerms&, const LossTerms&) = default;
};

/// The seven component combinations of the ablation table, rows 1..7.
inline constexpr std::array<LossTerms, 7> kAblationRows = {{
    {true, false, false, false},
    {false, true, false, false},
    {true, true, false, false},
    {true, false, true, false},
    {true, false, false, true},
    {true, true, true, false},
    {true, false, true, true},
}};

/// Row `row` (1-based) of the ablation table.
LossTerms ablation_row(int row);

struct LossBreakdown {
  double ce = 0.0;
  double pro = 0.0;
  double lgc = 0.0;
  double ic = 0.0;
  double total = 0.0;
  double lambda_pro = 1.0;
  double lambda_lgc = 1.0;
};

/// total = ce + ic + lambda_pro pro + lambda_lgc lgc with inactive terms
/// zeroed in the returned breakdown.
LossBreakdown total_loss(const LossBreakdown& components, const LossTerms& active);

}  // namespace pnl

#endif  // PNL_LOSSES_HPP_
