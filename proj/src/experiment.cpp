#include "pbagg/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pbagg/metrics.hpp"
#include "pbagg/random.hpp"

namespace pbagg {

namespace {

using Clock = std::chrono::steady_clock;

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string sh_label(double z) { return "SH@" + format_double(z); }

struct Run {
  std::string label;
  AggregatorConfig config;
};

std::vector<Run> runs_for(const ExperimentSpec& spec, std::size_t m, std::uint64_t seed) {
  std::vector<Run> runs;
  for (const Mode mode : spec.algorithms) {
    AggregatorConfig cfg;
    cfg.capacity = m;
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.preaggregate = spec.preaggregate;
    if (mode != Mode::sh) {
      runs.push_back({std::string(to_string(mode)), cfg});
      continue;
    }
    if (spec.sh_threshold) {
      cfg.sh_fixed_threshold = spec.sh_threshold;
      runs.push_back({"SH", cfg});
    }
    for (const double z : spec.sh_grid) {
      cfg.sh_fixed_threshold = z;
      runs.push_back({sh_label(z), cfg});
    }
  }
  return runs;
}

// Mean of each value over R in (lo, hi].
double band_mean(const std::vector<PrecisionRecall>& curve, std::size_t lo, std::size_t hi, bool precision) {
  double s = 0.0;
  for (std::size_t R = lo + 1; R <= hi; ++R) s += precision ? curve[R - 1].precision : curve[R - 1].recall;
  return s / static_cast<double>(hi - lo);
}

}  // namespace

MetricSelection parse_metrics(std::string_view list) {
  MetricSelection sel{false, false, false, false, false};
  while (!list.empty()) {
    const auto comma = list.find(',');
    const std::string_view name = list.substr(0, comma);
    if (name == "wre") sel.wre = true;
    else if (name == "subpop_wre") sel.subpop_wre = true;
    else if (name == "rank_pr") sel.rank_pr = true;
    else if (name == "timing") sel.timing = true;
    else if (name == "insertions") sel.insertions = true;
    else if (!name.empty()) throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return sel;
}

void validate(const ExperimentSpec& spec) {
  if (spec.algorithms.empty()) throw std::invalid_argument("experiment needs at least one algorithm");
  if (spec.capacity_grid.empty()) throw std::invalid_argument("capacity grid must not be empty");
  for (const auto m : spec.capacity_grid)
    if (m == 0) throw std::invalid_argument("capacities must be >= 1");
  if (spec.trials == 0) throw std::invalid_argument("trials must be >= 1");
  if (spec.trace.kind == TraceSpec::Kind::synthetic) validate(spec.trace.synthetic);
  if (spec.overlay) {
    if (spec.overlay->kind == TraceSpec::Kind::synthetic) validate(spec.overlay->synthetic);
    validate(MixSpec{spec.overlay_fraction, spec.mix_window, 0});
  }
  const bool has_sh = std::find(spec.algorithms.begin(), spec.algorithms.end(), Mode::sh) != spec.algorithms.end();
  if (has_sh && !spec.sh_threshold && spec.sh_grid.empty())
    throw std::invalid_argument("SH needs a threshold or a threshold grid");
  for (const double z : spec.sh_grid)
    if (!(z > 0.0) || !std::isfinite(z)) throw std::invalid_argument("SH grid values must be finite and > 0");
  if (spec.metrics.subpop_wre) {
    if (spec.subpop_sizes.empty()) throw std::invalid_argument("subpop_wre needs subpopulation sizes");
    if (spec.subpop_count == 0) throw std::invalid_argument("subpop_count must be >= 1");
    for (const auto s : spec.subpop_sizes)
      if (s == 0) throw std::invalid_argument("subpopulation sizes must be >= 1");
  }
  for (const auto R : spec.rank_grid)
    if (R == 0) throw std::invalid_argument("rank grid values must be >= 1");
}

std::vector<StreamItem> load_trace(const TraceSpec& spec, std::uint64_t seed,
                                   std::span<const StreamItem> csv_items) {
  if (spec.kind == TraceSpec::Kind::synthetic) {
    SyntheticSpec s = spec.synthetic;
    s.seed = seed;
    return gen_synthetic(s);
  }
  std::vector<StreamItem> items(csv_items.begin(), csv_items.end());
  if (spec.shuffle) shuffle_items(items, seed);
  return items;
}

std::vector<ResultRow> run_trial(const ExperimentSpec& spec, std::size_t trial,
                                 std::span<const StreamItem> csv_items,
                                 std::span<const StreamItem> csv_overlay) {
  const std::uint64_t trial_seed = derive_seed(spec.base_seed, trial);
  const std::uint64_t algo_seed = derive_seed(trial_seed, 1);

  std::vector<StreamItem> items = load_trace(spec.trace, derive_seed(trial_seed, 0), csv_items);
  if (spec.overlay) {
    const auto extra = load_trace(*spec.overlay, derive_seed(trial_seed, 3), csv_overlay);
    items = mix_traces(items, extra, MixSpec{spec.overlay_fraction, spec.mix_window, derive_seed(trial_seed, 4)});
  }
  if (items.empty()) throw std::invalid_argument("trace is empty");

  const ValueMap truth = exact_totals(items);
  std::vector<Key> keys;
  keys.reserve(truth.size());
  for (const auto& [k, v] : truth) keys.push_back(k);
  std::sort(keys.begin(), keys.end());

  std::vector<std::vector<std::vector<Key>>> subsets;
  if (spec.metrics.subpop_wre) {
    for (std::size_t i = 0; i < spec.subpop_sizes.size(); ++i)
      subsets.push_back(random_subsets(keys, std::min(spec.subpop_sizes[i], keys.size()), spec.subpop_count,
                                       derive_seed(derive_seed(trial_seed, 2), i)));
  }
  RankMap truth_ranks;
  std::size_t top_rank = 0;
  if (spec.metrics.rank_pr) {
    truth_ranks = dense_rank(truth, spec.rank_rounding);
    top_rank = max_rank(truth_ranks);
  }

  std::vector<ResultRow> rows;
  for (const std::size_t m : spec.capacity_grid) {
    for (const Run& run : runs_for(spec, m, algo_seed)) {
      const auto emit = [&](std::string metric, double value) {
        rows.push_back({run.label, m, trial, std::move(metric), value});
      };
      auto agg = make_aggregator(run.config);
      const auto t0 = Clock::now();
      for (const StreamItem& it : items) agg->observe(it);
      const Summary summary = agg->summary();
      const auto t1 = Clock::now();
      const ValueMap estimate = to_value_map(summary);
      const EvalPair pair{truth, estimate};

      if (spec.metrics.wre) emit("wre", wre(pair));
      if (spec.metrics.subpop_wre) {
        for (std::size_t i = 0; i < subsets.size(); ++i)
          emit("subpop_wre@" + std::to_string(spec.subpop_sizes[i]), subpop_wre(pair, subsets[i]));
      }
      if (spec.metrics.rank_pr) {
        ValueMap full;
        full.reserve(truth.size());
        for (const auto& [k, v] : truth) full.emplace(k, 0.0);
        for (const auto& [k, v] : estimate) full[k] = v;
        const RankMap est_ranks = dense_rank(full, spec.rank_rounding);
        std::size_t curve_len = top_rank;
        for (const auto R : spec.rank_grid) curve_len = std::max(curve_len, R);
        const auto curve = rank_prec_recall_curve(truth_ranks, est_ranks, curve_len);
        for (const auto R : spec.rank_grid) {
          emit("prec@" + std::to_string(R), curve[R - 1].precision);
          emit("rec@" + std::to_string(R), curve[R - 1].recall);
        }
        const std::size_t cuts[4] = {0, top_rank / 3, 2 * top_rank / 3, top_rank};
        for (int band = 0; band < 3; ++band) {
          if (cuts[band + 1] <= cuts[band]) continue;
          const std::string tag = std::to_string(band + 1);
          emit("prec_t" + tag, band_mean(curve, cuts[band], cuts[band + 1], true));
          emit("rec_t" + tag, band_mean(curve, cuts[band], cuts[band + 1], false));
        }
      }
      if (spec.metrics.timing) {
        emit("ns_per_item", std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(items.size()));
      }
      if (spec.metrics.insertions) {
        emit("insertions", static_cast<double>(summary.insertions));
        emit("evictions", static_cast<double>(summary.evictions));
        emit("rejections", static_cast<double>(summary.rejections));
      }
      emit("retained", static_cast<double>(summary.entries.size()));
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  return run_experiment(spec, spec.threads == 1 ? Execution::serial : Execution::parallel);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, Execution execution) {
  validate(spec);
  std::vector<StreamItem> csv_items, csv_overlay;
  if (spec.trace.kind == TraceSpec::Kind::csv) csv_items = read_csv_trace(spec.trace.csv_path).items;
  if (spec.overlay && spec.overlay->kind == TraceSpec::Kind::csv)
    csv_overlay = read_csv_trace(spec.overlay->csv_path).items;

  std::vector<std::vector<ResultRow>> per_trial(spec.trials);
  if (execution == Execution::serial) {
    for (std::size_t t = 0; t < spec.trials; ++t) per_trial[t] = run_trial(spec, t, csv_items, csv_overlay);
  } else {
    std::exception_ptr failure;
    const long n = static_cast<long>(spec.trials);
#ifdef _OPENMP
    const int threads = spec.threads > 0 ? spec.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
    for (long t = 0; t < n; ++t) {
      try {
        per_trial[static_cast<std::size_t>(t)] = run_trial(spec, static_cast<std::size_t>(t), csv_items, csv_overlay);
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical(pbagg_failure)
#endif
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  ExperimentResult result;
  for (auto& rows : per_trial) {
    result.rows.insert(result.rows.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.algorithm, a.m, a.trial) < std::tie(b.algorithm, b.m, b.trial);
  });
  result.means = summarize_rows(result.rows);

  // Best-case SH: lowest mean WRE among sweep points whose mean storage fits m.
  if (!spec.sh_grid.empty() && spec.metrics.wre) {
    for (const std::size_t m : spec.capacity_grid) {
      std::optional<double> best_z;
      double best_wre = 0.0;
      for (const double z : spec.sh_grid) {
        const std::string label = sh_label(z);
        if (result.mean(label, m, "retained") > static_cast<double>(m)) continue;
        const double w = result.mean(label, m, "wre");
        if (!best_z || w < best_wre) {
          best_z = z;
          best_wre = w;
        }
      }
      if (!best_z) continue;
      const std::string label = sh_label(*best_z);
      std::vector<MeanRow> picked;
      for (const MeanRow& r : result.means) {
        if (r.algorithm == label && r.m == m) picked.push_back({"SH_BEST", m, r.metric, r.mean, r.stddev});
      }
      picked.push_back({"SH_BEST", m, "sh_threshold", *best_z, 0.0});
      result.means.insert(result.means.end(), picked.begin(), picked.end());
    }
  }
  return result;
}

double ExperimentResult::mean(std::string_view algorithm, std::size_t m, std::string_view metric) const {
  for (const MeanRow& r : means) {
    if (r.algorithm == algorithm && r.m == m && r.metric == metric) return r.mean;
  }
  throw std::out_of_range("no mean for " + std::string(algorithm) + "/" + std::to_string(m) + "/" + std::string(metric));
}

std::vector<MeanRow> summarize_rows(std::span<const ResultRow> rows) {
  // Preserve first-appearance order of (algorithm, m, metric).
  std::map<std::tuple<std::string, std::size_t, std::string>, std::size_t> slot;
  std::vector<MeanRow> means;
  std::vector<std::vector<double>> values;
  for (const ResultRow& r : rows) {
    auto [it, inserted] = slot.try_emplace({r.algorithm, r.m, r.metric}, means.size());
    if (inserted) {
      means.push_back({r.algorithm, r.m, r.metric, 0.0, 0.0});
      values.emplace_back();
    }
    values[it->second].push_back(r.value);
  }
  for (std::size_t i = 0; i < means.size(); ++i) {
    const auto& v = values[i];
    double s = 0.0;
    for (const double x : v) s += x;
    const double mean = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    means[i].mean = mean;
    means[i].stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return means;
}

bool is_timing_metric(std::string_view metric) { return metric == "ns_per_item"; }

void write_results(std::ostream& out, std::span<const ResultRow> rows) {
  out << "algorithm,m,trial,metric,value\n";
  for (const ResultRow& r : rows)
    out << r.algorithm << ',' << r.m << ',' << r.trial << ',' << r.metric << ',' << format_double(r.value) << '\n';
}

void write_means(std::ostream& out, std::span<const MeanRow> means) {
  out << "algorithm,m,metric,mean,stddev\n";
  for (const MeanRow& r : means)
    out << r.algorithm << ',' << r.m << ',' << r.metric << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << '\n';
}

std::filesystem::path write_experiment(const ExperimentResult& result, const std::filesystem::path& output) {
  std::filesystem::path means_path = output;
  means_path.replace_filename(output.stem().string() + "_means" + output.extension().string());
  std::ofstream rows(output);
  if (!rows) throw std::runtime_error("cannot write '" + output.string() + "'");
  write_results(rows, result.rows);
  std::ofstream means(means_path);
  if (!means) throw std::runtime_error("cannot write '" + means_path.string() + "'");
  write_means(means, result.means);
  if (!rows || !means) throw std::runtime_error("error while writing results");
  return means_path;
}

// ---- bench ----

std::vector<BenchRow> bench(const BenchSpec& spec) {
  if (spec.algorithms.empty() || spec.capacity_grid.empty())
    throw std::invalid_argument("bench needs algorithms and capacities");
  if (spec.repeats == 0) throw std::invalid_argument("bench needs repeats >= 1");
  std::vector<StreamItem> csv_items;
  if (spec.trace.kind == TraceSpec::Kind::csv) csv_items = read_csv_trace(spec.trace.csv_path).items;
  const std::vector<StreamItem> items = load_trace(spec.trace, derive_seed(spec.seed, 0), csv_items);
  if (items.empty()) throw std::invalid_argument("trace is empty");

  std::vector<BenchRow> rows;
  for (const Mode mode : spec.algorithms) {
    for (const std::size_t m : spec.capacity_grid) {
      AggregatorConfig cfg;
      cfg.capacity = m;
      cfg.mode = mode;
      cfg.seed = derive_seed(spec.seed, 1);
      cfg.preaggregate = spec.preaggregate;
      if (mode == Mode::sh) cfg.sh_fixed_threshold = spec.sh_threshold;
      validate(cfg);

      BenchRow row;
      row.algorithm = std::string(to_string(mode));
      row.m = m;
      double total = 0.0;
      row.min_ns_per_item = INFINITY;
      for (std::size_t rep = 0; rep <= spec.repeats; ++rep) {
        auto agg = make_aggregator(cfg);
        const auto t0 = Clock::now();
        for (const StreamItem& it : items) agg->observe(it);
        const Summary s = agg->summary();
        const auto t1 = Clock::now();
        if (rep == 0) {
          const Counters& c = agg->counters();
          row.insertions = s.insertions;
          row.evictions = s.evictions;
          row.rejections = s.rejections;
          row.deletion_rounds = c.deletion_rounds;
          row.randomizer_draws = c.randomizer_draws;
          continue;
        }
        const double ns = std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(items.size());
        total += ns;
        row.min_ns_per_item = std::min(row.min_ns_per_item, ns);
      }
      row.ns_per_item = total / static_cast<double>(spec.repeats);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench(std::ostream& out, std::span<const BenchRow> rows) {
  out << "algorithm,m,ns_per_item,min_ns_per_item,insertions,evictions,rejections,deletion_rounds,randomizer_draws\n";
  for (const BenchRow& r : rows) {
    out << r.algorithm << ',' << r.m << ',' << format_double(r.ns_per_item) << ',' << format_double(r.min_ns_per_item)
        << ',' << r.insertions << ',' << r.evictions << ',' << r.rejections << ',' << r.deletion_rounds << ','
        << r.randomizer_draws << '\n';
  }
}

double fit_power_exponent(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_power_exponent: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_power_exponent: values must be > 0");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_power_exponent: x values are all equal");
  return (n * sxy - sx * sy) / den;
}

}  // namespace pbagg
