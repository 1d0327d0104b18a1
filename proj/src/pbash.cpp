#include "pbagg/pbash.hpp"

#include <algorithm>
#include <utility>

namespace pbagg {

Pbash::Pbash(const PbaOptions& options, UniformSource u_source, UniformSource gate_source)
    : core_(options.capacity, std::move(u_source)),
      gate_(std::move(gate_source)),
      error_filter_(options.error_filter),
      preaggregate_(options.preaggregate) {}

void Pbash::observe(const StreamItem& item) {
  validate(item);
  ++core_.counters().items;
  if (!preaggregate_) {
    mainloop(item.key, item.size);
    return;
  }
  if (auto run = pre_.push(item)) mainloop(run->key, run->size);
}

void Pbash::mainloop(Key key, double x) {
  if (const auto offset = core_.heap().lookup(key)) {
    core_.aggregate(*offset, x);
    return;
  }
  const double z = core_.threshold();
  const double p = gate_probability(x, z);
  const double r = gate_.draw(key);
  // p == 1 admits unconditionally, even for r == 1.
  if (p < 1.0 && !(r < p)) {
    ++core_.counters().rejections;
    return;
  }
  core_.admit(key, x, error_filter_ ? 0.0 : std::max(x, z));
}

void Pbash::flush() {
  if (auto run = pre_.flush()) mainloop(run->key, run->size);
}

double Pbash::query(Key key) {
  flush();
  return core_.query(key);
}

Summary Pbash::summary() {
  flush();
  return core_.finalize();
}

}  // namespace pbagg
