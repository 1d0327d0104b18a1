#pragma once

// Accuracy metrics against an exact ground truth.

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "pbagg/model.hpp"

namespace pbagg {

using ValueMap = std::unordered_map<Key, double>;
using RankMap = std::unordered_map<Key, std::size_t>;

// Keys absent from `estimate` count as 0. Keys only present in `estimate`
// are ignored.
struct EvalPair {
  const ValueMap& truth;
  const ValueMap& estimate;
};

ValueMap to_value_map(const Summary& summary);

// sum_k |est_k - X_k| / sum_k X_k over the true keys.
double wre(const EvalPair& pair);

// sum_S |est(S) - X(S)| / sum_S X(S).
double subpop_wre(const EvalPair& pair, std::span<const std::vector<Key>> subsets);

// `count` subsets of `size` keys each, every subset drawn uniformly without
// replacement from `keys`.
std::vector<std::vector<Key>> random_subsets(std::span<const Key> keys, std::size_t size,
                                             std::size_t count, std::uint64_t seed);

// Dense ranks in descending value order: equal values share a rank and ranks
// run 1, 2, 3, ... without gaps. `round` rounds values to the nearest integer
// first.
RankMap dense_rank(const ValueMap& values, bool round);

std::size_t max_rank(const RankMap& ranks);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

// N(R) = keys with true rank <= R, N^(R) = keys with estimated rank <= R.
// precision = |N and N^| / |N^|, recall = |N and N^| / |N|. An empty
// denominator gives 1 when the other set is empty too, else 0.
PrecisionRecall rank_prec_recall(const RankMap& truth_ranks, const RankMap& est_ranks, std::size_t R);

// rank_prec_recall for every R in [1, max_R] in one pass.
std::vector<PrecisionRecall> rank_prec_recall_curve(const RankMap& truth_ranks,
                                                    const RankMap& est_ranks, std::size_t max_R);

}  // namespace pbagg
