#pragma once

// Multi-trial experiment harness and the timing benchmark.
//
// Every trial is self-contained: it regenerates (or reshuffles) its trace from
// a trial-derived seed, computes the exact totals, and runs each requested
// algorithm and capacity on the same items. Trials run serially or spread
// over OpenMP threads; both paths produce identical rows apart from timing.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbagg/model.hpp"
#include "pbagg/traces.hpp"

namespace pbagg {

struct TraceSpec {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  SyntheticSpec synthetic;  // seed is replaced per trial
  std::filesystem::path csv_path;
  bool shuffle = true;  // csv traces: reshuffle every trial
};

struct MetricSelection {
  bool wre = true;
  bool subpop_wre = false;
  bool rank_pr = false;
  bool timing = false;
  bool insertions = false;
};

// Parses a comma list such as "wre,subpop_wre,rank_pr,timing,insertions".
MetricSelection parse_metrics(std::string_view list);

struct ExperimentSpec {
  std::vector<Mode> algorithms;
  TraceSpec trace;
  std::optional<TraceSpec> overlay;  // mixed into the trace when present
  std::optional<double> overlay_fraction = 0.5;  // empty: random per window
  std::size_t mix_window = 10000;
  std::vector<std::size_t> capacity_grid;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  MetricSelection metrics;
  std::vector<std::size_t> subpop_sizes;
  std::size_t subpop_count = 100;
  std::vector<std::size_t> rank_grid;  // explicit R values for prec@R / rec@R
  bool rank_rounding = true;
  std::optional<double> sh_threshold;  // fixed SH threshold
  std::vector<double> sh_grid;         // or a sweep; adds SH_BEST to the means
  bool preaggregate = true;
  int threads = 0;  // <= 0: OpenMP default; 1: serial
};

void validate(const ExperimentSpec& spec);

struct ResultRow {
  std::string algorithm;
  std::size_t m = 0;
  std::size_t trial = 0;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct MeanRow {
  std::string algorithm;
  std::size_t m = 0;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one trial

  friend bool operator==(const MeanRow&, const MeanRow&) = default;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<MeanRow> means;

  // Mean of (algorithm, m, metric); throws std::out_of_range if absent.
  double mean(std::string_view algorithm, std::size_t m, std::string_view metric) const;
};

enum class Execution { serial, parallel };

// Rows of one trial; the building block of both execution paths.
std::vector<ResultRow> run_trial(const ExperimentSpec& spec, std::size_t trial,
                                 std::span<const StreamItem> csv_items = {},
                                 std::span<const StreamItem> csv_overlay = {});

ExperimentResult run_experiment(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec, Execution execution);

std::vector<MeanRow> summarize_rows(std::span<const ResultRow> rows);

bool is_timing_metric(std::string_view metric);

void write_results(std::ostream& out, std::span<const ResultRow> rows);
void write_means(std::ostream& out, std::span<const MeanRow> means);
// Writes `output` and a sibling "<stem>_means<ext>" file; returns the latter.
std::filesystem::path write_experiment(const ExperimentResult& result, const std::filesystem::path& output);

// ---- timing benchmark ----

struct BenchSpec {
  std::vector<Mode> algorithms;
  TraceSpec trace;  // generated once, shared by all runs
  std::vector<std::size_t> capacity_grid;
  std::size_t repeats = 3;  // timed runs after one warm-up run
  std::uint64_t seed = 0;
  std::optional<double> sh_threshold;
  bool preaggregate = true;
};

struct BenchRow {
  std::string algorithm;
  std::size_t m = 0;
  double ns_per_item = 0.0;  // mean over timed runs
  double min_ns_per_item = 0.0;
  std::uint64_t insertions = 0;
  std::uint64_t evictions = 0;
  std::uint64_t rejections = 0;
  std::uint64_t deletion_rounds = 0;
  std::uint64_t randomizer_draws = 0;
};

std::vector<BenchRow> bench(const BenchSpec& spec);
void write_bench(std::ostream& out, std::span<const BenchRow> rows);

// Least-squares slope of log(y) against log(x).
double fit_power_exponent(std::span<const double> x, std::span<const double> y);

// Loads the items a TraceSpec describes with the given seed.
std::vector<StreamItem> load_trace(const TraceSpec& spec, std::uint64_t seed,
                                   std::span<const StreamItem> csv_items = {});

}  // namespace pbagg
