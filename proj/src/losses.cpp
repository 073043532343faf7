#include "pnl/losses.hpp"

#include <cmath>
#include <iostream>

namespace pnl {

namespace {

void check_label(Index label, Index k, const char* what) {
  if (label < 0 || label >= k) {
    throw LabelRangeError(std::string(what) + ": label " + std::to_string(label) +
                          " outside [0," + std::to_string(k) + ")");
  }
}

void check_tau(double tau, const char* what) {
  if (!(tau > 0.0)) throw InvalidHyperparameter(std::string(what) + ": temperature must be > 0");
}

}  // namespace

LossGrad ce_loss(const Vec& p, Index label) {
  check_label(label, p.size(), "ce_loss");
  double py = p(label);
  if (py < kProbabilityFloor) {
    std::cerr << "warning: ce_loss clamped p[" << label << "]=" << py << " to "
              << kProbabilityFloor << "\n";
    py = kProbabilityFloor;
  }
  LossGrad out{-std::log(py), p};
  out.grad(label) -= 1.0;
  return out;
}

LossGrad proto_loss(const Vec& q, const PrototypeBank& bank, Index label, double tau) {
  check_label(label, bank.num_classes(), "proto_loss");
  check_tau(tau, "proto_loss");
  if (q.size() != bank.dim()) throw ShapeError("proto_loss: feature dimension mismatch");
  const Vec logits = bank.centroids().transpose() * q / tau;
  const double lse = log_sum_exp(logits);
  Vec s = (logits.array() - lse).exp().matrix();
  s(label) -= 1.0;
  return {lse - logits(label), bank.centroids() * s / tau};
}

LossGrad contrast_loss(const Vec& q, const Mat& positives, const Mat& negatives, double tau) {
  check_tau(tau, "contrast_loss");
  if (positives.cols() == 0) {
    throw ContractViolation("contrast_loss: positive set is empty");
  }
  if (positives.rows() != q.size() || (negatives.cols() > 0 && negatives.rows() != q.size())) {
    throw ShapeError("contrast_loss: key dimension mismatch");
  }
  const Index n_pos = positives.cols();
  const Index n_neg = negatives.cols();
  Vec logits(n_pos + n_neg);
  logits.head(n_pos) = positives.transpose() * q / tau;
  if (n_neg > 0) logits.tail(n_neg) = negatives.transpose() * q / tau;

  const double lse_pos = log_sum_exp(logits.head(n_pos));
  const double lse_all = log_sum_exp(logits);
  const double scale = 1.0 / static_cast<double>(n_pos);

  // d/dq [lse_all - lse_pos] = (sum_all w k - sum_P w^P k) / tau
  Vec w_all = (logits.array() - lse_all).exp().matrix();
  Vec w_pos = (logits.head(n_pos).array() - lse_pos).exp().matrix();
  Vec grad = positives * (w_all.head(n_pos) - w_pos);
  if (n_neg > 0) grad.noalias() += negatives * w_all.tail(n_neg);
  grad *= scale / tau;

  return {-scale * (lse_pos - lse_all), std::move(grad)};
}

LossGrad inst_contrast_loss(const Vec& q, const Vec& k_pos, const Mat& negatives, double tau) {
  return contrast_loss(q, Mat(k_pos), negatives, tau);
}

LossGrad label_guided_loss(const Vec& q, const Mat& positives, const Mat& negatives, double tau) {
  return contrast_loss(q, positives, negatives, tau);
}

std::string LossTerms::describe() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += "+";
    s += name;
  };
  add(ce, "ce");
  add(ic, "ic");
  add(pro, "pro");
  add(lgc, "lgc");
  return s.empty() ? "none" : s;
}

LossTerms ablation_row(int row) {
  if (row < 1 || row > static_cast<int>(kAblationRows.size())) {
    throw ConfigError("ablation row " + std::to_string(row) + " outside 1..7");
  }
  return kAblationRows[static_cast<std::size_t>(row - 1)];
}

LossBreakdown total_loss(const LossBreakdown& c, const LossTerms& active) {
  LossBreakdown out = c;
  if (!active.ce) out.ce = 0.0;
  if (!active.ic) out.ic = 0.0;
  if (!active.pro) out.pro = 0.0;
  if (!active.lgc) out.lgc = 0.0;
  out.total = out.ce + out.ic + out.lambda_pro * out.pro + out.lambda_lgc * out.lgc;
  return out;
}

}  // namespace pnl
