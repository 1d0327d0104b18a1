#pragma once

// HashHeap: an array min-heap of reservoir entries ordered by priority w/u,
// indexed by an open-addressing hash table that maps each key to the heap
// offset of its entry. Keys live only in the heap; the table stores offsets
// and resolves collisions by comparing against the key found at that offset.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pbagg/model.hpp"
#include "pbagg/random.hpp"

namespace pbagg {

// Probability-weighted running estimate of one aggregate.
//
// `acc` holds a*q, i.e. the sum of increments each scaled by the inclusion
// probability in force when it arrived. The estimate a = acc/q. Lowering q
// therefore rescales a by q_old/q_new without touching acc.
struct Estimate {
  double acc = 0.0;
  double q = 1.0;  // in (0,1]

  double value() const noexcept { return acc / q; }
};

struct ReservoirEntry {
  Key key = 0;
  double w = 0.0;         // weight accumulated since admission
  double u = 1.0;         // admission randomizer in (0,1]
  double priority = 0.0;  // w/u, cached
  Estimate est;

  static ReservoirEntry make(Key key, double w, double u, double initial_estimate) {
    return ReservoirEntry{key, w, u, w / u, Estimate{initial_estimate, 1.0}};
  }
};

// Strict heap order: priority, then key.
inline bool lower_priority(const ReservoirEntry& a, const ReservoirEntry& b) noexcept {
  return a.priority < b.priority || (a.priority == b.priority && a.key < b.key);
}

struct MinView {
  Key key = 0;
  double priority = 0.0;
};

class HashHeap {
 public:
  static constexpr std::uint32_t kEmpty = 0xffffffffu;

  explicit HashHeap(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return heap_.size(); }
  bool empty() const noexcept { return heap_.empty(); }
  bool full() const noexcept { return heap_.size() == capacity_; }

  std::optional<std::size_t> lookup(Key key) const;

  // Precondition: key absent and size < capacity (std::logic_error otherwise).
  void insert(const ReservoirEntry& entry);

  // w += delta, then restore heap order. Returns the entry's new offset.
  // Throws std::logic_error for an absent key or non-positive delta.
  std::size_t increase_weight(Key key, double delta);
  std::size_t increase_weight_at(std::size_t offset, double delta);

  std::optional<MinView> min() const;

  // Evicts the root and installs `entry` in its place. Preconditions: full,
  // entry outranks the current root, entry.key absent.
  ReservoirEntry replace_min(const ReservoirEntry& entry);

  std::span<const ReservoirEntry> entries() const noexcept { return heap_; }
  const ReservoirEntry& operator[](std::size_t offset) const { return heap_[offset]; }

  // The estimate fields may be changed freely; they do not affect ordering.
  Estimate& estimate_at(std::size_t offset) { return heap_[offset].est; }

  // Total entry moves performed by sift-down during increase_weight.
  std::uint64_t aggregation_moves() const noexcept { return aggregation_moves_; }

  // Full structural check: heap property, index consistency, live slot count.
  bool check_invariants() const;

  std::size_t table_size() const noexcept { return slots_.size(); }
  std::size_t home_slot(Key key) const noexcept {
    return static_cast<std::size_t>(mix_key(key)) & mask_;
  }

 private:
  static std::uint64_t mix_key(Key key) noexcept { return mix64(key); }

  std::size_t find_slot_of_offset(Key key, std::uint32_t offset) const;
  void erase_slot(std::size_t slot);
  std::size_t sift_up(std::size_t offset, std::size_t slot);
  std::size_t sift_down(std::size_t offset, std::size_t slot);

  std::size_t capacity_;
  std::size_t mask_;
  std::vector<ReservoirEntry> heap_;
  std::vector<std::uint32_t> slots_;
  std::uint64_t aggregation_moves_ = 0;
};

}  // namespace pbagg
