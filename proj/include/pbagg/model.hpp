#pragma once

// Shared domain types and the interface every aggregation algorithm implements.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pbagg {

// Keys are 64-bit words. Byte-string keys (e.g. flow 5-tuples) are reduced to
// 64-bit fingerprints on ingest; see traces.hpp.
using Key = std::uint64_t;

struct StreamItem {
  Key key = 0;
  double size = 0.0;  // finite, > 0

  friend bool operator==(const StreamItem&, const StreamItem&) = default;
};

// Throws std::invalid_argument unless size is finite and positive.
void validate(const StreamItem& item);

enum class Mode { pba, pba_ef, pbash, pbash_ef, ash, sh, exact };

std::string_view to_string(Mode mode);
// Accepts the canonical upper-case names (PBA, PBA_EF, PBASH-EF, ...).
Mode parse_mode(std::string_view name);
std::vector<Mode> all_modes();

// How the per-key randomizer u is produced.
enum class UDraw { stored, hashed };

struct AggregatorConfig {
  std::size_t capacity = 0;
  Mode mode = Mode::pba;
  std::uint64_t seed = 0;
  std::optional<double> sh_fixed_threshold;  // SH only
  bool preaggregate = true;                  // PBA family only
  UDraw u_draw = UDraw::stored;              // PBA family only
};

// Throws std::invalid_argument on an inconsistent configuration.
void validate(const AggregatorConfig& config);

struct Counters {
  std::uint64_t items = 0;       // observe() calls
  std::uint64_t insertions = 0;  // keys that entered storage
  std::uint64_t evictions = 0;   // resident keys removed
  std::uint64_t rejections = 0;  // new-key arrivals turned away
  std::uint64_t deletion_rounds = 0;
  std::uint64_t randomizer_draws = 0;
};

struct SummaryEntry {
  Key key = 0;
  double estimate = 0.0;

  friend bool operator==(const SummaryEntry&, const SummaryEntry&) = default;
};

// Final (key, estimate) list, descending by estimate with ties broken by key.
// EXACT and SH keep unbounded storage, so for those modes entries may exceed
// reservoir_capacity.
struct Summary {
  std::vector<SummaryEntry> entries;
  std::size_t reservoir_capacity = 0;
  std::uint64_t items_processed = 0;
  std::uint64_t insertions = 0;
  std::uint64_t evictions = 0;
  std::uint64_t rejections = 0;
};

// Sorts entries into the canonical summary order.
void sort_entries(std::vector<SummaryEntry>& entries);

// Single-writer stream aggregator. Instances are movable between threads but
// must not be shared without external synchronization.
class Aggregator {
 public:
  virtual ~Aggregator() = default;

  virtual void observe(const StreamItem& item) = 0;
  // Current estimate of the key's aggregate; 0 when the key is not stored.
  virtual double query(Key key) = 0;
  virtual Summary summary() = 0;
  virtual const Counters& counters() const = 0;
  virtual Mode mode() const = 0;
};

std::unique_ptr<Aggregator> make_aggregator(const AggregatorConfig& config);

}  // namespace pbagg
