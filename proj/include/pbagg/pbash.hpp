#pragma once

// Priority-Based Adaptive Sample and Hold: a Sample-and-Hold gate in front of
// the PBA reservoir. A new key of size x passes with probability
// min(1, x/z*), z* being the reservoir's current threshold, and starts with
// the normalized estimate max(x, z*). Its weight w still starts at x.

#include "pbagg/pba.hpp"

namespace pbagg {

class Pbash final : public Aggregator {
 public:
  // `gate_source` supplies the admission draws r; keep it independent of
  // `u_source` so PBA and PBASH runs with the same seed share u draws.
  Pbash(const PbaOptions& options, UniformSource u_source = UniformSource::seeded(0),
        UniformSource gate_source = UniformSource::seeded(1));

  void observe(const StreamItem& item) override;
  void mainloop(Key key, double x);
  void flush();

  double query(Key key) override;
  Summary summary() override;
  const Counters& counters() const override { return core_.counters(); }
  Mode mode() const override { return error_filter_ ? Mode::pbash_ef : Mode::pbash; }

  double threshold() const noexcept { return core_.threshold(); }
  const HashHeap& reservoir() const noexcept { return core_.heap(); }

 private:
  PriorityReservoir core_;
  UniformSource gate_;
  bool error_filter_;
  bool preaggregate_;
  PreAggregator pre_;
};

// Admission probability of the gate; z == 0 admits everything.
inline double gate_probability(double x, double z) noexcept {
  if (z <= 0.0 || x >= z) return 1.0;
  return x / z;
}

}  // namespace pbagg
