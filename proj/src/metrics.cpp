#include "pbagg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pbagg/random.hpp"

namespace pbagg {

namespace {

double estimate_of(const ValueMap& estimate, Key key) {
  const auto it = estimate.find(key);
  return it == estimate.end() ? 0.0 : it->second;
}

double ratio_or(std::size_t num, std::size_t den, bool other_empty) {
  if (den == 0) return other_empty ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ValueMap to_value_map(const Summary& summary) {
  ValueMap out;
  out.reserve(summary.entries.size());
  for (const SummaryEntry& e : summary.entries) out.emplace(e.key, e.estimate);
  return out;
}

double wre(const EvalPair& pair) {
  if (pair.truth.empty()) throw std::invalid_argument("wre: empty ground truth");
  double err = 0.0, total = 0.0;
  for (const auto& [key, x] : pair.truth) {
    err += std::abs(estimate_of(pair.estimate, key) - x);
    total += x;
  }
  return err / total;
}

double subpop_wre(const EvalPair& pair, std::span<const std::vector<Key>> subsets) {
  if (subsets.empty()) throw std::invalid_argument("subpop_wre: no subsets");
  double err = 0.0, total = 0.0;
  for (const auto& subset : subsets) {
    double x = 0.0, est = 0.0;
    for (const Key k : subset) {
      if (const auto it = pair.truth.find(k); it != pair.truth.end()) x += it->second;
      est += estimate_of(pair.estimate, k);
    }
    err += std::abs(est - x);
    total += x;
  }
  if (!(total > 0.0)) throw std::invalid_argument("subpop_wre: subsets carry no true weight");
  return err / total;
}

std::vector<std::vector<Key>> random_subsets(std::span<const Key> keys, std::size_t size,
                                             std::size_t count, std::uint64_t seed) {
  if (size > keys.size()) throw std::invalid_argument("random_subsets: subset larger than key set");
  std::mt19937_64 rng(seed);
  std::vector<Key> pool(keys.begin(), keys.end());
  std::vector<std::vector<Key>> out(count);
  for (auto& subset : out) {
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    subset.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
  }
  return out;
}

RankMap dense_rank(const ValueMap& values, bool round) {
  std::vector<std::pair<double, Key>> sorted;
  sorted.reserve(values.size());
  for (const auto& [key, v] : values) sorted.emplace_back(round ? std::round(v) : v, key);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  RankMap ranks;
  ranks.reserve(sorted.size());
  std::size_t rank = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i == 0 || sorted[i].first != sorted[i - 1].first) ++rank;
    ranks.emplace(sorted[i].second, rank);
  }
  return ranks;
}

std::size_t max_rank(const RankMap& ranks) {
  std::size_t m = 0;
  for (const auto& [key, r] : ranks) m = std::max(m, r);
  return m;
}

PrecisionRecall rank_prec_recall(const RankMap& truth_ranks, const RankMap& est_ranks, std::size_t R) {
  if (R == 0) throw std::invalid_argument("rank_prec_recall: R must be >= 1");
  std::size_t n_true = 0, n_est = 0, both = 0;
  for (const auto& [key, r] : truth_ranks) {
    if (r > R) continue;
    ++n_true;
    if (const auto it = est_ranks.find(key); it != est_ranks.end() && it->second <= R) ++both;
  }
  for (const auto& [key, r] : est_ranks) n_est += r <= R;
  return {ratio_or(both, n_est, n_true == 0), ratio_or(both, n_true, n_est == 0)};
}

std::vector<PrecisionRecall> rank_prec_recall_curve(const RankMap& truth_ranks,
                                                    const RankMap& est_ranks, std::size_t max_R) {
  // Histogram each key's entry point into N(R), N^(R) and their intersection,
  // then prefix-sum.
  std::vector<std::size_t> d_true(max_R + 2, 0), d_est(max_R + 2, 0), d_both(max_R + 2, 0);
  const auto clamp = [&](std::size_t r) { return std::min(r, max_R + 1); };
  for (const auto& [key, r] : truth_ranks) {
    ++d_true[clamp(r)];
    const auto it = est_ranks.find(key);
    if (it != est_ranks.end()) ++d_both[clamp(std::max(r, it->second))];
  }
  for (const auto& [key, r] : est_ranks) ++d_est[clamp(r)];

  std::vector<PrecisionRecall> out;
  out.reserve(max_R);
  std::size_t n_true = d_true[0], n_est = d_est[0], both = d_both[0];
  for (std::size_t R = 1; R <= max_R; ++R) {
    n_true += d_true[R];
    n_est += d_est[R];
    both += d_both[R];
    out.push_back({ratio_or(both, n_est, n_true == 0), ratio_or(both, n_true, n_est == 0)});
  }
  return out;
}

}  // namespace pbagg
