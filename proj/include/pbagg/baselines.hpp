#pragma once

// Comparison algorithms: the exact oracle, classic priority sampling of
// uniquely keyed weights, fixed-threshold Sample and Hold, and Adaptive
// Sample and Hold with a fixed cache.

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "pbagg/model.hpp"
#include "pbagg/random.hpp"

namespace pbagg {

class ExactAggregator final : public Aggregator {
 public:
  void observe(const StreamItem& item) override;
  double query(Key key) override;
  Summary summary() override;
  const Counters& counters() const override { return counters_; }
  Mode mode() const override { return Mode::exact; }

  const std::unordered_map<Key, double>& totals() const noexcept { return totals_; }

 private:
  std::unordered_map<Key, double> totals_;
  Counters counters_;
};

struct PrioritySample {
  std::vector<std::size_t> retained;  // ascending indices
  std::vector<double> estimates;      // one per input weight, 0 if dropped
  double threshold = 0.0;             // (m+1)-st largest priority, 0 if n <= m
};

// Keeps the m largest priorities w_i/u_i (ties: larger index wins) and
// estimates each kept weight by max(w_i, threshold).
PrioritySample priority_sample(std::span<const double> weights, std::size_t m,
                               std::span<const double> u);

// Non-adaptive Sample and Hold: a new key is held with probability
// min(1, x/z) and starts at max(x, z); held keys count exactly afterwards.
// Storage is unbounded.
class SampleHold final : public Aggregator {
 public:
  SampleHold(double threshold, UniformSource source);

  void observe(const StreamItem& item) override;
  double query(Key key) override;
  Summary summary() override;
  const Counters& counters() const override { return counters_; }
  Mode mode() const override { return Mode::sh; }

 private:
  double threshold_;
  UniformSource source_;
  std::unordered_map<Key, double> held_;
  Counters counters_;
};

// Adaptive Sample and Hold with a cache of m keys. Every new key enters with
// its size; an overfull cache runs one deletion round over all m+1 keys:
// fresh ranks e_j/a_j with e_j ~ Exp(1), the largest rank tau is evicted and
// each survivor is divided by its conditional retention probability
// 1 - exp(-a_j * tau).
class Ash final : public Aggregator {
 public:
  Ash(std::size_t capacity, UniformSource source);

  void observe(const StreamItem& item) override;
  double query(Key key) override;
  Summary summary() override;
  const Counters& counters() const override { return counters_; }
  Mode mode() const override { return Mode::ash; }

  std::size_t size() const noexcept { return cache_.size(); }

 private:
  struct Slot {
    Key key;
    double a;
  };

  void deletion_round();

  std::size_t capacity_;
  UniformSource source_;
  std::vector<Slot> cache_;
  std::unordered_map<Key, std::size_t> index_;
  std::vector<double> ranks_;
  Counters counters_;
};

}  // namespace pbagg
