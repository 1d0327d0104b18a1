#include "pbagg/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "pbagg/random.hpp"

namespace pbagg {

namespace {

// Guards memory against the (2^-53-probability) extreme tail draws.
constexpr double kMaxItemsPerKey = 1e8;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

void validate(const SyntheticSpec& spec) {
  if (spec.num_keys == 0) throw std::invalid_argument("synthetic trace needs num_keys >= 1");
  if (!(spec.pareto_alpha > 0.0)) throw std::invalid_argument("pareto_alpha must be > 0");
  if (!(spec.pareto_xmin > 0.0)) throw std::invalid_argument("pareto_xmin must be > 0");
  if (!(spec.unit_weight > 0.0) || !std::isfinite(spec.unit_weight))
    throw std::invalid_argument("unit_weight must be finite and > 0");
}

std::vector<std::uint64_t> pareto_counts(const SyntheticSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(derive_seed(spec.seed, 0));
  std::vector<std::uint64_t> counts(spec.num_keys);
  for (auto& c : counts) {
    const double draw = spec.pareto_xmin * std::pow(to_unit(rng()), -1.0 / spec.pareto_alpha);
    c = static_cast<std::uint64_t>(std::ceil(std::min(draw, kMaxItemsPerKey)));
  }
  return counts;
}

std::vector<StreamItem> gen_synthetic(const SyntheticSpec& spec) {
  const std::vector<std::uint64_t> counts = pareto_counts(spec);
  std::uint64_t total = 0;
  for (const auto c : counts) total += c;
  std::vector<StreamItem> items;
  items.reserve(total);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const Key key = spec.key_offset + i;
    for (std::uint64_t j = 0; j < counts[i]; ++j) items.push_back({key, spec.unit_weight});
  }
  if (spec.shuffle) shuffle_items(items, derive_seed(spec.seed, 1));
  return items;
}

void shuffle_items(std::vector<StreamItem>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
}

std::unordered_map<Key, double> exact_totals(std::span<const StreamItem> items) {
  std::unordered_map<Key, double> totals;
  for (const StreamItem& it : items) totals[it.key] += it.size;
  return totals;
}

// FNV-1a, then a full-avalanche finalizer.
Key fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

TraceError::TraceError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

LabeledTrace read_csv_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file '" + path.string() + "'");
  return parse_csv_trace(in, path.string());
}

LabeledTrace parse_csv_trace(std::istream& in, const std::string& source) {
  LabeledTrace trace;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw TraceError(source, 1, "missing header");
  ++line_no;
  const auto header = split(line);
  std::size_t key_columns = 0;
  if (header.size() == 2 && header[0] == "key" && header[1] == "size") {
    key_columns = 1;
  } else if (header.size() == 6 && header[0] == "src_ip" && header[1] == "dst_ip" &&
             header[2] == "src_port" && header[3] == "dst_port" && header[4] == "protocol" &&
             header[5] == "bytes") {
    key_columns = 5;
  } else {
    throw TraceError(source, 1, "unrecognized header '" + line + "'");
  }

  std::string joined;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line);
    if (cols.size() != key_columns + 1)
      throw TraceError(source, line_no, "expected " + std::to_string(key_columns + 1) + " columns");

    joined.assign(cols[0]);
    for (std::size_t c = 1; c < key_columns; ++c) {
      joined.push_back('|');
      joined.append(cols[c]);
    }
    if (joined.empty()) throw TraceError(source, line_no, "empty key");

    const std::string_view size_text = cols[key_columns];
    double size = 0.0;
    const auto [ptr, ec] = std::from_chars(size_text.data(), size_text.data() + size_text.size(), size);
    if (ec != std::errc{} || ptr != size_text.data() + size_text.size())
      throw TraceError(source, line_no, "size '" + std::string(size_text) + "' is not a number");
    if (!std::isfinite(size) || !(size > 0.0))
      throw TraceError(source, line_no, "size must be finite and > 0");

    Key key = 0;
    const auto [kptr, kec] = std::from_chars(joined.data(), joined.data() + joined.size(), key);
    const bool numeric = kec == std::errc{} && kptr == joined.data() + joined.size();
    if (!numeric) key = fingerprint(joined);
    auto [it, inserted] = trace.labels.try_emplace(key, joined);
    if (!inserted && it->second != joined)
      throw TraceError(source, line_no, "key fingerprint collision between '" + it->second + "' and '" + joined + "'");
    trace.items.push_back({key, size});
  }
  // Plain integers need no label.
  std::erase_if(trace.labels, [](const auto& kv) {
    Key parsed = 0;
    const auto& s = kv.second;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), parsed);
    return ec == std::errc{} && p == s.data() + s.size() && parsed == kv.first;
  });
  return trace;
}

void write_csv_trace(std::ostream& out, std::span<const StreamItem> items,
                     const std::unordered_map<Key, std::string>* labels) {
  out << "key,size\n";
  char buf[64];
  for (const StreamItem& it : items) {
    const std::string* label = nullptr;
    if (labels) {
      if (const auto f = labels->find(it.key); f != labels->end()) label = &f->second;
    }
    if (label) {
      out << *label;
    } else {
      out << it.key;
    }
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, it.size);
    out << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf)) << '\n';
  }
}

void validate(const MixSpec& spec) {
  if (spec.window == 0) throw std::invalid_argument("mix window must be >= 1 item");
  if (spec.overlay_fraction && !(*spec.overlay_fraction >= 0.0 && *spec.overlay_fraction <= 1.0))
    throw std::invalid_argument("overlay fraction must lie in [0,1]");
}

std::vector<StreamItem> mix_traces(std::span<const StreamItem> base,
                                   std::span<const StreamItem> overlay, const MixSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(derive_seed(spec.seed, 0));
  std::vector<StreamItem> out;
  out.reserve(base.size() + overlay.size());
  std::size_t next_overlay = 0;

  for (std::size_t start = 0; start < base.size(); start += spec.window) {
    const auto window = base.subspan(start, std::min(spec.window, base.size() - start));
    double volume = 0.0;
    for (const StreamItem& it : window) volume += it.size;
    const double fraction = spec.overlay_fraction ? *spec.overlay_fraction : to_unit(rng()) * (1.0 - 0x1.0p-53);

    const std::size_t overlay_begin = next_overlay;
    double added = 0.0;
    while (next_overlay < overlay.size() && added < fraction * volume) added += overlay[next_overlay++].size;
    const auto extra = overlay.subspan(overlay_begin, next_overlay - overlay_begin);

    // Uniform random interleaving: each step picks a side in proportion to
    // what it has left.
    std::size_t b = 0, o = 0;
    while (b < window.size() || o < extra.size()) {
      const std::uint64_t left_b = window.size() - b;
      const std::uint64_t left = left_b + (extra.size() - o);
      if (std::uniform_int_distribution<std::uint64_t>(0, left - 1)(rng) < left_b) {
        out.push_back(window[b++]);
      } else {
        out.push_back(extra[o++]);
      }
    }
  }
  return out;
}

}  // namespace pbagg
