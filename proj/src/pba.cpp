#include "pbagg/pba.hpp"

#include <utility>

namespace pbagg {

std::optional<StreamItem> PreAggregator::push(const StreamItem& item) {
  if (pending_ && pending_->key == item.key) {
    pending_->size += item.size;
    return std::nullopt;
  }
  std::optional<StreamItem> done = pending_;
  pending_ = item;
  return done;
}

std::optional<StreamItem> PreAggregator::flush() {
  std::optional<StreamItem> done = pending_;
  pending_.reset();
  return done;
}

PriorityReservoir::PriorityReservoir(std::size_t capacity, UniformSource u_source)
    : heap_(capacity), u_source_(std::move(u_source)) {}

void PriorityReservoir::aggregate(std::size_t offset, double x) {
  Estimate& est = heap_.estimate_at(offset);
  apply_threshold(est, heap_[offset].w, z_star_);
  est.acc += x * est.q;
  heap_.increase_weight_at(offset, x);
}

bool PriorityReservoir::admit(Key key, double x, double initial_estimate) {
  const ReservoirEntry candidate = ReservoirEntry::make(key, x, u_source_.draw(key), initial_estimate);
  if (!heap_.full()) {
    heap_.insert(candidate);
    ++counters_.insertions;
    return true;
  }
  // Full: the lowest of the m+1 priorities goes, and z* rises to it.
  const ReservoirEntry& root = heap_[0];
  if (lower_priority(candidate, root)) {
    if (candidate.priority > z_star_) z_star_ = candidate.priority;
    ++counters_.rejections;
    return false;
  }
  const ReservoirEntry evicted = heap_.replace_min(candidate);
  if (evicted.priority > z_star_) z_star_ = evicted.priority;
  ++counters_.insertions;
  ++counters_.evictions;
  return true;
}

double PriorityReservoir::query(Key key) {
  const auto offset = heap_.lookup(key);
  if (!offset) return 0.0;
  Estimate& est = heap_.estimate_at(*offset);
  apply_threshold(est, heap_[*offset].w, z_star_);
  return est.value();
}

Summary PriorityReservoir::finalize() {
  Summary out;
  out.reservoir_capacity = heap_.capacity();
  out.entries.reserve(heap_.size());
  for (std::size_t i = 0; i < heap_.size(); ++i) {
    Estimate& est = heap_.estimate_at(i);
    apply_threshold(est, heap_[i].w, z_star_);
    out.entries.push_back({heap_[i].key, est.value()});
  }
  sort_entries(out.entries);
  out.items_processed = counters_.items;
  out.insertions = counters_.insertions;
  out.evictions = counters_.evictions;
  out.rejections = counters_.rejections;
  return out;
}

Pba::Pba(const PbaOptions& options, UniformSource u_source)
    : core_(options.capacity, std::move(u_source)),
      error_filter_(options.error_filter),
      preaggregate_(options.preaggregate) {}

void Pba::observe(const StreamItem& item) {
  validate(item);
  ++core_.counters().items;
  if (!preaggregate_) {
    mainloop(item.key, item.size);
    return;
  }
  if (auto run = pre_.push(item)) mainloop(run->key, run->size);
}

void Pba::mainloop(Key key, double x) {
  if (const auto offset = core_.heap().lookup(key)) {
    core_.aggregate(*offset, x);
    return;
  }
  core_.admit(key, x, error_filter_ ? 0.0 : x);
}

void Pba::flush() {
  if (auto run = pre_.flush()) mainloop(run->key, run->size);
}

double Pba::query(Key key) {
  flush();
  return core_.query(key);
}

Summary Pba::summary() {
  flush();
  return core_.finalize();
}

}  // namespace pbagg
