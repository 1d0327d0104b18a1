#include "pbagg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace pbagg {

namespace {

Summary summarize_map(const std::unordered_map<Key, double>& values, std::size_t capacity,
                      const Counters& counters) {
  Summary out;
  out.reservoir_capacity = capacity;
  out.entries.reserve(values.size());
  for (const auto& [key, v] : values) out.entries.push_back({key, v});
  sort_entries(out.entries);
  out.items_processed = counters.items;
  out.insertions = counters.insertions;
  out.evictions = counters.evictions;
  out.rejections = counters.rejections;
  return out;
}

double lookup_or_zero(const std::unordered_map<Key, double>& values, Key key) {
  const auto it = values.find(key);
  return it == values.end() ? 0.0 : it->second;
}

}  // namespace

// ---- exact ----

void ExactAggregator::observe(const StreamItem& item) {
  validate(item);
  ++counters_.items;
  auto [it, inserted] = totals_.try_emplace(item.key, 0.0);
  if (inserted) ++counters_.insertions;
  it->second += item.size;
}

double ExactAggregator::query(Key key) { return lookup_or_zero(totals_, key); }

Summary ExactAggregator::summary() { return summarize_map(totals_, totals_.size(), counters_); }

// ---- classic priority sampling ----

PrioritySample priority_sample(std::span<const double> weights, std::size_t m,
                               std::span<const double> u) {
  if (weights.size() != u.size()) throw std::invalid_argument("priority_sample: size mismatch");
  if (m == 0) throw std::invalid_argument("priority_sample: m must be >= 1");
  const std::size_t n = weights.size();
  PrioritySample out;
  out.estimates.assign(n, 0.0);

  std::vector<double> priority(n);
  for (std::size_t i = 0; i < n; ++i) priority[i] = weights[i] / u[i];
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return priority[a] > priority[b] || (priority[a] == priority[b] && a > b);
  });

  const std::size_t kept = std::min(m, n);
  if (n > m) out.threshold = priority[order[m]];
  out.retained.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kept));
  std::sort(out.retained.begin(), out.retained.end());
  for (const std::size_t i : out.retained) out.estimates[i] = std::max(weights[i], out.threshold);
  return out;
}

// ---- sample and hold ----

SampleHold::SampleHold(double threshold, UniformSource source)
    : threshold_(threshold), source_(std::move(source)) {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw std::invalid_argument("SampleHold: threshold must be finite and > 0");
}

void SampleHold::observe(const StreamItem& item) {
  validate(item);
  ++counters_.items;
  if (const auto it = held_.find(item.key); it != held_.end()) {
    it->second += item.size;
    return;
  }
  const double r = source_.draw(item.key);
  if (item.size < threshold_ && !(r < item.size / threshold_)) {
    ++counters_.rejections;
    return;
  }
  held_.emplace(item.key, std::max(item.size, threshold_));
  ++counters_.insertions;
}

double SampleHold::query(Key key) { return lookup_or_zero(held_, key); }

Summary SampleHold::summary() { return summarize_map(held_, held_.size(), counters_); }

// ---- adaptive sample and hold ----

Ash::Ash(std::size_t capacity, UniformSource source)
    : capacity_(capacity), source_(std::move(source)) {
  if (capacity == 0) throw std::invalid_argument("Ash: capacity must be >= 1");
  cache_.reserve(capacity + 1);
  index_.reserve(2 * (capacity + 1));
  ranks_.reserve(capacity + 1);
}

void Ash::observe(const StreamItem& item) {
  validate(item);
  ++counters_.items;
  if (const auto it = index_.find(item.key); it != index_.end()) {
    cache_[it->second].a += item.size;
    return;
  }
  index_.emplace(item.key, cache_.size());
  cache_.push_back({item.key, item.size});
  ++counters_.insertions;
  if (cache_.size() > capacity_) deletion_round();
}

void Ash::deletion_round() {
  const std::size_t n = cache_.size();
  ranks_.resize(n);
  std::size_t victim = 0;
  for (std::size_t j = 0; j < n; ++j) {
    ranks_[j] = source_.exponential(cache_[j].key) / cache_[j].a;
    if (ranks_[j] > ranks_[victim]) victim = j;
  }
  counters_.randomizer_draws += n;
  ++counters_.deletion_rounds;
  ++counters_.evictions;

  const double tau = ranks_[victim];
  index_.erase(cache_[victim].key);
  if (victim != n - 1) {
    cache_[victim] = cache_.back();
    index_[cache_[victim].key] = victim;
  }
  cache_.pop_back();

  // P[e_j / a_j < tau] = 1 - exp(-a_j tau)
  for (Slot& s : cache_) s.a /= -std::expm1(-s.a * tau);
}

double Ash::query(Key key) {
  const auto it = index_.find(key);
  return it == index_.end() ? 0.0 : cache_[it->second].a;
}

Summary Ash::summary() {
  Summary out;
  out.reservoir_capacity = capacity_;
  out.entries.reserve(cache_.size());
  for (const Slot& s : cache_) out.entries.push_back({s.key, s.a});
  sort_entries(out.entries);
  out.items_processed = counters_.items;
  out.insertions = counters_.insertions;
  out.evictions = counters_.evictions;
  out.rejections = counters_.rejections;
  return out;
}

}  // namespace pbagg
