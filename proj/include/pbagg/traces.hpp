#pragma once

// Trace sources: heavy-tailed synthetic traces, CSV ingestion, and a mixer
// that overlays a second trace window by window.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pbagg/model.hpp"

namespace pbagg {

struct SyntheticSpec {
  std::size_t num_keys = 1;
  double pareto_alpha = 1.2;
  double pareto_xmin = 1.0;
  double unit_weight = 1.0;
  bool shuffle = true;
  std::uint64_t seed = 0;
  Key key_offset = 0;  // keys are key_offset + [0, num_keys)
};

void validate(const SyntheticSpec& spec);

// Per-key item counts ceil(xmin * U^(-1/alpha)), U uniform on (0,1].
std::vector<std::uint64_t> pareto_counts(const SyntheticSpec& spec);

// Emits count_i unit-weight items for every key, globally shuffled when
// spec.shuffle is set.
std::vector<StreamItem> gen_synthetic(const SyntheticSpec& spec);

void shuffle_items(std::vector<StreamItem>& items, std::uint64_t seed);

std::unordered_map<Key, double> exact_totals(std::span<const StreamItem> items);

// 64-bit fingerprint of a byte-string key. Distinct strings collide with
// probability about n^2 / 2^65 for n keys; readers detect and reject it.
Key fingerprint(std::string_view bytes);

class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct LabeledTrace {
  std::vector<StreamItem> items;
  // Original text of every key that was fingerprinted.
  std::unordered_map<Key, std::string> labels;
};

// CSV with header `key,size`, or `src_ip,dst_ip,src_port,dst_port,protocol,bytes`
// whose key is the five columns joined with '|'. A key that is a plain
// decimal integer is used as-is; anything else is fingerprinted.
LabeledTrace read_csv_trace(const std::filesystem::path& path);
LabeledTrace parse_csv_trace(std::istream& in, const std::string& source = "<stream>");

// Writes `key,size`, substituting labels where known. Sizes use the shortest
// representation that round-trips.
void write_csv_trace(std::ostream& out, std::span<const StreamItem> items,
                     const std::unordered_map<Key, std::string>* labels = nullptr);

struct MixSpec {
  // Overlay volume as a fraction of each base window's volume. Empty means a
  // fresh uniform draw on (0,1) per window.
  std::optional<double> overlay_fraction = 0.5;
  std::size_t window = 10000;  // base items per window
  std::uint64_t seed = 0;
};

void validate(const MixSpec& spec);

// For each window of base items, takes overlay items in order until their
// volume reaches fraction * base volume (or the overlay runs out) and merges
// the two uniformly at random, keeping each side's internal order.
std::vector<StreamItem> mix_traces(std::span<const StreamItem> base,
                                   std::span<const StreamItem> overlay, const MixSpec& spec);

}  // namespace pbagg
