#include "pbagg/hashheap.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace pbagg {

HashHeap::HashHeap(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("HashHeap: capacity must be >= 1");
  if (capacity >= kEmpty / 2) throw std::invalid_argument("HashHeap: capacity too large");
  // Load factor <= 1/2.
  const std::size_t table = std::bit_ceil(2 * capacity);
  mask_ = table - 1;
  slots_.assign(table, kEmpty);
  heap_.reserve(capacity);
}

std::optional<std::size_t> HashHeap::lookup(Key key) const {
  for (std::size_t s = home_slot(key);; s = (s + 1) & mask_) {
    const std::uint32_t off = slots_[s];
    if (off == kEmpty) return std::nullopt;
    if (heap_[off].key == key) return off;
  }
}

std::size_t HashHeap::find_slot_of_offset(Key key, std::uint32_t offset) const {
  for (std::size_t s = home_slot(key);; s = (s + 1) & mask_) {
    if (slots_[s] == offset) return s;
    if (slots_[s] == kEmpty) throw std::logic_error("HashHeap: index lost track of an entry");
  }
}

void HashHeap::insert(const ReservoirEntry& entry) {
  if (full()) throw std::logic_error("HashHeap::insert on a full heap; use replace_min");
  std::size_t s = home_slot(entry.key);
  for (; slots_[s] != kEmpty; s = (s + 1) & mask_) {
    if (heap_[slots_[s]].key == entry.key) throw std::logic_error("HashHeap::insert: duplicate key");
  }
  const std::size_t offset = heap_.size();
  heap_.push_back(entry);
  slots_[s] = static_cast<std::uint32_t>(offset);
  sift_up(offset, s);
}

std::size_t HashHeap::increase_weight(Key key, double delta) {
  const auto offset = lookup(key);
  if (!offset) throw std::logic_error("HashHeap::increase_weight: key not present");
  return increase_weight_at(*offset, delta);
}

std::size_t HashHeap::increase_weight_at(std::size_t offset, double delta) {
  if (!(delta > 0.0)) throw std::logic_error("HashHeap::increase_weight: delta must be > 0");
  ReservoirEntry& e = heap_[offset];
  e.w += delta;
  e.priority = e.w / e.u;
  const std::size_t last = 2 * offset + 1;
  // Leaves cannot move; skip the index probe.
  if (last >= heap_.size()) return offset;
  const std::size_t slot = find_slot_of_offset(e.key, static_cast<std::uint32_t>(offset));
  return sift_down(offset, slot);
}

std::optional<MinView> HashHeap::min() const {
  if (heap_.empty()) return std::nullopt;
  return MinView{heap_.front().key, heap_.front().priority};
}

ReservoirEntry HashHeap::replace_min(const ReservoirEntry& entry) {
  if (!full()) throw std::logic_error("HashHeap::replace_min requires a full heap");
  if (!lower_priority(heap_.front(), entry))
    throw std::logic_error("HashHeap::replace_min: entry does not outrank the minimum");

  ReservoirEntry evicted = heap_.front();
  erase_slot(find_slot_of_offset(evicted.key, 0));

  std::size_t s = home_slot(entry.key);
  for (; slots_[s] != kEmpty; s = (s + 1) & mask_) {
    if (heap_[slots_[s]].key == entry.key)
      throw std::logic_error("HashHeap::replace_min: duplicate key");
  }
  heap_.front() = entry;
  slots_[s] = 0;
  const std::uint64_t moves = aggregation_moves_;
  sift_down(0, s);
  aggregation_moves_ = moves;  // only aggregation-driven moves are tallied
  return evicted;
}

// Backward-shift deletion: pull later members of the probe run into the hole
// whenever their home slot does not lie in the cyclic interval (hole, j].
void HashHeap::erase_slot(std::size_t hole) {
  for (std::size_t j = (hole + 1) & mask_; slots_[j] != kEmpty; j = (j + 1) & mask_) {
    const std::size_t home = home_slot(heap_[slots_[j]].key);
    const std::size_t dist_home = (j - home) & mask_;
    const std::size_t dist_hole = (j - hole) & mask_;
    if (dist_home >= dist_hole) {
      slots_[hole] = slots_[j];
      hole = j;
    }
  }
  slots_[hole] = kEmpty;
}

// Both sifts move a hole rather than swapping. `slot` is the index slot of the
// entry being sifted; it is patched once at the end because during the sift
// another slot may transiently carry the same offset.
std::size_t HashHeap::sift_up(std::size_t offset, std::size_t slot) {
  ReservoirEntry moving = heap_[offset];
  while (offset > 0) {
    const std::size_t parent = (offset - 1) / 2;
    if (!lower_priority(moving, heap_[parent])) break;
    heap_[offset] = heap_[parent];
    slots_[find_slot_of_offset(heap_[offset].key, static_cast<std::uint32_t>(parent))] =
        static_cast<std::uint32_t>(offset);
    offset = parent;
  }
  heap_[offset] = moving;
  slots_[slot] = static_cast<std::uint32_t>(offset);
  return offset;
}

std::size_t HashHeap::sift_down(std::size_t offset, std::size_t slot) {
  const std::size_t n = heap_.size();
  ReservoirEntry moving = heap_[offset];
  for (;;) {
    std::size_t child = 2 * offset + 1;
    if (child >= n) break;
    if (child + 1 < n && lower_priority(heap_[child + 1], heap_[child])) ++child;
    if (!lower_priority(heap_[child], moving)) break;
    heap_[offset] = heap_[child];
    slots_[find_slot_of_offset(heap_[offset].key, static_cast<std::uint32_t>(child))] =
        static_cast<std::uint32_t>(offset);
    offset = child;
    ++aggregation_moves_;
  }
  heap_[offset] = moving;
  slots_[slot] = static_cast<std::uint32_t>(offset);
  return offset;
}

bool HashHeap::check_invariants() const {
  const std::size_t n = heap_.size();
  if (n > capacity_) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const ReservoirEntry& e = heap_[i];
    if (!(e.u > 0.0 && e.u <= 1.0) || !(e.w > 0.0) || !(e.est.q > 0.0 && e.est.q <= 1.0))
      return false;
    if (!std::isfinite(e.priority) || e.priority != e.w / e.u) return false;
    if (i > 0 && lower_priority(e, heap_[(i - 1) / 2])) return false;
    const auto found = lookup(e.key);
    if (!found || *found != i) return false;
  }
  std::size_t live = 0;
  for (const std::uint32_t off : slots_) {
    if (off == kEmpty) continue;
    if (off >= n) return false;
    ++live;
  }
  return live == n;
}

}  // namespace pbagg
