#include "pnl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "pnl/text_io.hpp"

namespace pnl {

RankedRetrieval rank_by_score(Index query, const std::vector<double>& scores,
                              const std::vector<bool>& relevant) {
  if (scores.size() != relevant.size()) throw ShapeError("rank_by_score: size mismatch");
  std::vector<Index> order(scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  RankedRetrieval r;
  r.query = query;
  r.gallery = order;
  r.relevant.reserve(order.size());
  for (Index g : order) r.relevant.push_back(relevant[static_cast<std::size_t>(g)]);
  return r;
}

std::vector<RankedRetrieval> rank_all(const std::vector<Vec>& features,
                                      const std::vector<Index>& identity) {
  if (features.size() != identity.size()) throw ShapeError("rank_all: size mismatch");
  const std::size_t n = features.size();
  std::vector<RankedRetrieval> out;
  out.reserve(n);
  std::vector<double> scores;
  std::vector<bool> relevant;
  std::vector<Index> ids;
  for (std::size_t q = 0; q < n; ++q) {
    scores.clear();
    relevant.clear();
    ids.clear();
    for (std::size_t g = 0; g < n; ++g) {
      if (g == q) continue;
      scores.push_back(features[q].dot(features[g]));
      relevant.push_back(identity[g] == identity[q]);
      ids.push_back(static_cast<Index>(g));
    }
    RankedRetrieval r = rank_by_score(static_cast<Index>(q), scores, relevant);
    for (auto& g : r.gallery) g = ids[static_cast<std::size_t>(g)];
    out.push_back(std::move(r));
  }
  return out;
}

double average_precision(const RankedRetrieval& r) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < r.relevant.size(); ++i) {
    if (!r.relevant[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  if (hits == 0) {
    throw ProtocolError("query " + std::to_string(r.query) + " has no relevant gallery item");
  }
  return sum / static_cast<double>(hits);
}

double mean_average_precision(const std::vector<RankedRetrieval>& queries) {
  if (queries.empty()) throw ProtocolError("mean_average_precision: no queries");
  double sum = 0.0;
  for (const auto& q : queries) sum += average_precision(q);
  return sum / static_cast<double>(queries.size());
}

double cmc_top_k(const std::vector<RankedRetrieval>& queries, std::size_t k) {
  if (queries.empty()) throw ProtocolError("cmc_top_k: no queries");
  std::size_t matched = 0;
  for (const auto& q : queries) {
    if (std::find(q.relevant.begin(), q.relevant.end(), true) == q.relevant.end()) {
      throw ProtocolError("query " + std::to_string(q.query) + " has no relevant gallery item");
    }
    const std::size_t top = std::min(k, q.relevant.size());
    if (std::find(q.relevant.begin(), q.relevant.begin() + static_cast<std::ptrdiff_t>(top), true) !=
        q.relevant.begin() + static_cast<std::ptrdiff_t>(top)) {
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(queries.size());
}

RetrievalMetrics evaluate_retrieval(const EncoderParams& encoder, const Observations& probe) {
  std::vector<Vec> features;
  features.reserve(probe.x.size());
  for (const auto& x : probe.x) features.push_back(encode(encoder, x));
  const auto ranked = rank_all(features, probe.identity);
  return {mean_average_precision(ranked), cmc_top_k(ranked, 1)};
}

namespace {

double pairs(std::size_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0); }

template <typename Map>
double sum_pairs(const Map& m) {
  double s = 0.0;
  for (const auto& [key, n] : m) s += pairs(n);
  return s;
}

}  // namespace

CorrectionStats correction_accuracy(const std::vector<Index>& labels, const Dataset& dataset,
                                    const NoiseRecord* record) {
  if (record == nullptr) throw ProtocolError("correction_accuracy: noise record required");
  if (labels.size() != dataset.samples.size()) {
    throw ShapeError("correction_accuracy: one label per sample required");
  }
  const auto ids = record->corrupted_identities();
  const std::set<Index> corrupted(ids.begin(), ids.end());

  // Contingency counts over (rectified, raw, true).
  std::map<std::tuple<Index, Index, Index>, std::size_t> arb;
  std::map<std::pair<Index, Index>, std::size_t> ab, ar, rb;
  std::map<Index, std::size_t> a_only, r_only, b_only;
  std::size_t n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& s = dataset.samples[i];
    if (!corrupted.empty() && corrupted.count(s.y_true) == 0) continue;
    const Index a = labels[i], r = s.y_raw, b = s.y_true;
    ++arb[{a, r, b}];
    ++ab[{a, b}];
    ++ar[{a, r}];
    ++rb[{r, b}];
    ++a_only[a];
    ++r_only[r];
    ++b_only[b];
    ++n;
  }

  CorrectionStats out;
  out.corrupted_samples = corrupted.empty() ? 0 : n;
  const double total = pairs(n);
  if (total == 0.0) {
    out.agreement = out.noise1_recovery = out.noise2_recovery = 1.0;
    return out;
  }
  const double same_a = sum_pairs(a_only), same_b = sum_pairs(b_only), same_r = sum_pairs(r_only);
  const double same_ab = sum_pairs(ab), same_ar = sum_pairs(ar), same_rb = sum_pairs(rb);
  const double same_arb = sum_pairs(arb);
  out.agreement = (total - same_a - same_b + 2.0 * same_ab) / total;

  const double split_pairs = same_b - same_rb;       // same person, different raw label
  const double rejoined = same_ab - same_arb;        // ... now sharing a label
  out.noise1_recovery = split_pairs > 0.0 ? rejoined / split_pairs : 1.0;

  const double merged_pairs = same_r - same_rb;      // same raw label, different people
  const double still_merged = same_ar - same_arb;    // ... still sharing a label
  out.noise2_recovery = merged_pairs > 0.0 ? (merged_pairs - still_merged) / merged_pairs : 1.0;
  return out;
}

std::string SplitSpec::describe() const {
  return std::string(mode == SplitMode::SmallScale ? "small" : "fewshot") + "@" +
         format_double(fraction);
}

namespace {

std::size_t split_count(double fraction, std::size_t n, SplitRounding rounding) {
  constexpr double kSlack = 1e-9;  // 0.3 * 10 must count as 3
  const double x = fraction * static_cast<double>(n);
  const double c = rounding == SplitRounding::Ceil ? std::ceil(x - kSlack) : std::floor(x + kSlack);
  return std::max<std::size_t>(1, static_cast<std::size_t>(c));
}

}  // namespace

Dataset make_split(const Dataset& dataset, const SplitSpec& spec, std::uint64_t seed) {
  if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
    throw ProtocolError("split fraction must be in (0,1]");
  }
  if (dataset.samples.empty()) throw ProtocolError("make_split: empty dataset");
  std::mt19937_64 rng(seed);
  const auto k = static_cast<std::size_t>(dataset.num_classes);

  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    members[static_cast<std::size_t>(dataset.samples[i].y_raw)].push_back(i);
  }

  std::vector<bool> keep_sample(dataset.samples.size(), false);
  if (spec.mode == SplitMode::SmallScale) {
    std::vector<std::size_t> labels(k);
    std::iota(labels.begin(), labels.end(), std::size_t{0});
    std::shuffle(labels.begin(), labels.end(), rng);
    const std::size_t count = std::min(k, split_count(spec.fraction, k, spec.rounding));
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t s : members[labels[i]]) keep_sample[s] = true;
    }
  } else {
    for (auto& m : members) {
      if (m.empty()) continue;
      std::vector<std::size_t> order = m;
      std::shuffle(order.begin(), order.end(), rng);
      const std::size_t count = std::min(m.size(), split_count(spec.fraction, m.size(), spec.rounding));
      for (std::size_t i = 0; i < count; ++i) keep_sample[order[i]] = true;
    }
  }

  std::vector<Index> remap(k, -1);
  Dataset out;
  out.dim = dataset.dim;
  for (std::size_t label = 0; label < k; ++label) {
    for (std::size_t s : members[label]) {
      if (keep_sample[s]) {
        remap[label] = out.num_classes++;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (!keep_sample[i]) continue;
    Sample s = dataset.samples[i];
    s.y_raw = remap[static_cast<std::size_t>(s.y_raw)];
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw ProtocolError("make_split: split is empty");
  return out;
}

}  // namespace pnl
