#pragma once

// Priority-Based Aggregation.
//
// Each stored key carries one randomizer u drawn at admission and a weight w
// accumulated since admission. When a new key meets a full reservoir the
// lowest priority w/u among the m+1 candidates is discarded and the running
// threshold z* is raised to that priority. Inclusion probabilities
// q = min(q, w/z*) and the matching estimate correction are applied lazily,
// the next time a key is touched or read; z* is nondecreasing, so the lazy
// result equals applying every discard's correction eagerly.

#include <cstddef>
#include <cstdint>
#include <optional>

#include "pbagg/hashheap.hpp"
#include "pbagg/model.hpp"
#include "pbagg/random.hpp"

namespace pbagg {

// Merges runs of consecutive items that share a key.
class PreAggregator {
 public:
  // Returns the finished run when `item` starts a new one.
  std::optional<StreamItem> push(const StreamItem& item);
  // Returns the pending run, if any, and clears it.
  std::optional<StreamItem> flush();
  bool pending() const noexcept { return pending_.has_value(); }

 private:
  std::optional<StreamItem> pending_;
};

// Lowers q to min(q, w/z) (no-op for z == 0); the estimate acc/q scales by
// q_old/q_new accordingly.
inline void apply_threshold(Estimate& est, double w, double z) noexcept {
  if (z > 0.0) {
    const double bound = w / z;
    if (bound < est.q) est.q = bound;
  }
}
inline void apply_threshold(ReservoirEntry& entry, double z) noexcept {
  apply_threshold(entry.est, entry.w, z);
}

struct PbaOptions {
  std::size_t capacity = 0;
  bool error_filter = false;
  bool preaggregate = true;
};

// Reservoir, threshold and counters shared by PBA and PBASH. The two differ
// only in how a new key is allowed in and what its estimate starts at.
class PriorityReservoir {
 public:
  PriorityReservoir(std::size_t capacity, UniformSource u_source);

  // Cached path: deferred update, then a += x, w += x.
  void aggregate(std::size_t offset, double x);

  // New key: draws u, then inserts, replaces the minimum, or rejects.
  // Returns true when the key ends up stored.
  bool admit(Key key, double x, double initial_estimate);

  double query(Key key);
  // Applies the deferred update to every stored key and lists the estimates.
  Summary finalize();

  double threshold() const noexcept { return z_star_; }
  const HashHeap& heap() const noexcept { return heap_; }
  Counters& counters() noexcept { return counters_; }
  const Counters& counters() const noexcept { return counters_; }

 private:
  HashHeap heap_;
  double z_star_ = 0.0;
  UniformSource u_source_;
  Counters counters_;
};

class Pba final : public Aggregator {
 public:
  explicit Pba(const PbaOptions& options, UniformSource u_source = UniformSource::seeded(0));

  void observe(const StreamItem& item) override;
  // One main-loop step, bypassing pre-aggregation.
  void mainloop(Key key, double x);
  // Pushes any pre-aggregated run into the main loop.
  void flush();

  double query(Key key) override;
  Summary summary() override;
  const Counters& counters() const override { return core_.counters(); }
  Mode mode() const override { return error_filter_ ? Mode::pba_ef : Mode::pba; }

  double threshold() const noexcept { return core_.threshold(); }
  const HashHeap& reservoir() const noexcept { return core_.heap(); }

 private:
  PriorityReservoir core_;
  bool error_filter_;
  bool preaggregate_;
  PreAggregator pre_;
};

}  // namespace pbagg
