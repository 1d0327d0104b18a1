#include "pbagg/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pbagg/baselines.hpp"
#include "pbagg/pba.hpp"
#include "pbagg/pbash.hpp"
#include "pbagg/random.hpp"

namespace pbagg {

// ---- random ----

UniformSource UniformSource::seeded(std::uint64_t seed) {
  UniformSource s;
  s.kind_ = Kind::seeded;
  s.seed_ = seed;
  s.engine_.seed(seed);
  return s;
}

UniformSource UniformSource::pinned(std::vector<double> values) {
  for (const double v : values) {
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("UniformSource::pinned: values must lie in (0,1]");
  }
  UniformSource s;
  s.kind_ = Kind::pinned;
  s.pinned_ = std::move(values);
  return s;
}

UniformSource UniformSource::hashed(std::uint64_t seed) {
  UniformSource s;
  s.kind_ = Kind::hashed;
  s.seed_ = seed;
  return s;
}

double UniformSource::next_pinned() {
  if (cursor_ >= pinned_.size()) throw std::out_of_range("UniformSource: pinned sequence exhausted");
  return pinned_[cursor_++];
}

double UniformSource::exponential(std::uint64_t key) { return -std::log(draw(key)); }

// ---- items, modes, config ----

void validate(const StreamItem& item) {
  if (!std::isfinite(item.size) || !(item.size > 0.0))
    throw std::invalid_argument("stream item size must be finite and > 0, got " + std::to_string(item.size));
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::pba: return "PBA";
    case Mode::pba_ef: return "PBA_EF";
    case Mode::pbash: return "PBASH";
    case Mode::pbash_ef: return "PBASH_EF";
    case Mode::ash: return "ASH";
    case Mode::sh: return "SH";
    case Mode::exact: return "EXACT";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  std::string norm;
  for (const char c : name) norm.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (const Mode m : all_modes()) {
    if (to_string(m) == norm) return m;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

std::vector<Mode> all_modes() {
  return {Mode::pba, Mode::pba_ef, Mode::pbash, Mode::pbash_ef, Mode::ash, Mode::sh, Mode::exact};
}

void validate(const AggregatorConfig& config) {
  if (config.capacity == 0) throw std::invalid_argument("capacity must be >= 1");
  if (config.mode == Mode::sh) {
    if (!config.sh_fixed_threshold) throw std::invalid_argument("SH requires a fixed threshold");
    if (!(*config.sh_fixed_threshold > 0.0) || !std::isfinite(*config.sh_fixed_threshold))
      throw std::invalid_argument("SH threshold must be finite and > 0");
  } else if (config.sh_fixed_threshold) {
    throw std::invalid_argument("a fixed threshold only applies to SH");
  }
}

void sort_entries(std::vector<SummaryEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const SummaryEntry& a, const SummaryEntry& b) {
    return a.estimate > b.estimate || (a.estimate == b.estimate && a.key < b.key);
  });
}

std::unique_ptr<Aggregator> make_aggregator(const AggregatorConfig& config) {
  validate(config);
  // One u stream per run seed, shared by PBA and PBASH; gate and ASH draws
  // come from their own substreams.
  const auto u_source = [&] {
    const std::uint64_t s = derive_seed(config.seed, 1);
    return config.u_draw == UDraw::hashed ? UniformSource::hashed(s) : UniformSource::seeded(s);
  };
  const auto gate_source = [&] { return UniformSource::seeded(derive_seed(config.seed, 2)); };

  PbaOptions options;
  options.capacity = config.capacity;
  options.preaggregate = config.preaggregate;
  switch (config.mode) {
    case Mode::pba:
    case Mode::pba_ef:
      options.error_filter = config.mode == Mode::pba_ef;
      return std::make_unique<Pba>(options, u_source());
    case Mode::pbash:
    case Mode::pbash_ef:
      options.error_filter = config.mode == Mode::pbash_ef;
      return std::make_unique<Pbash>(options, u_source(), gate_source());
    case Mode::ash:
      return std::make_unique<Ash>(config.capacity, UniformSource::seeded(derive_seed(config.seed, 3)));
    case Mode::sh:
      return std::make_unique<SampleHold>(*config.sh_fixed_threshold, gate_source());
    case Mode::exact:
      return std::make_unique<ExactAggregator>();
  }
  throw std::invalid_argument("unsupported mode");
}

}  // namespace pbagg
