// pbagg: trace generation, mixing, multi-trial experiments and timing runs.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pbagg/experiment.hpp"
#include "pbagg/traces.hpp"

namespace {

using namespace pbagg;

// Overlay synthetic keys live in their own range so they never collide with
// base keys.
constexpr Key kOverlayKeyOffset = Key{1} << 40;

std::vector<Mode> parse_modes(const std::vector<std::string>& names) {
  std::vector<Mode> modes;
  for (const auto& n : names) {
    if (n == "all") {
      const auto all = all_modes();
      modes.insert(modes.end(), all.begin(), all.end());
    } else {
      modes.push_back(parse_mode(n));
    }
  }
  return modes;
}

std::optional<double> parse_fraction(const std::string& text) {
  if (text == "random") return std::nullopt;
  std::size_t used = 0;
  const double f = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("overlay fraction must be a number or 'random'");
  return f;
}

struct SyntheticFlags {
  std::size_t num_keys = 10000;
  double alpha = 1.2;
  double xmin = 1.0;
  double unit_weight = 1.0;

  void add(CLI::App* app, const std::string& prefix = "") {
    app->add_option("--" + prefix + "num-keys", num_keys, "Distinct keys of the synthetic trace")->capture_default_str();
    app->add_option("--" + prefix + "alpha", alpha, "Pareto shape of per-key item counts")->capture_default_str();
    app->add_option("--" + prefix + "xmin", xmin, "Pareto scale of per-key item counts")->capture_default_str();
    app->add_option("--" + prefix + "unit-weight", unit_weight, "Size of every synthetic item")->capture_default_str();
  }

  SyntheticSpec spec(bool shuffle, Key key_offset = 0) const {
    SyntheticSpec s;
    s.num_keys = num_keys;
    s.pareto_alpha = alpha;
    s.pareto_xmin = xmin;
    s.unit_weight = unit_weight;
    s.shuffle = shuffle;
    s.key_offset = key_offset;
    return s;
  }
};

template <class F>
void write_to(const std::string& path, F&& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-size stream aggregation: priority-based aggregation and baselines"};
  app.require_subcommand(1);

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "Write a synthetic heavy-tailed trace as key,size CSV");
  SyntheticFlags gen_flags;
  gen_flags.add(gen);
  std::uint64_t gen_seed = 0;
  bool gen_no_shuffle = false;
  std::string gen_output;
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_flag("--no-shuffle", gen_no_shuffle, "Keep each key's items contiguous");
  gen->add_option("-o,--output", gen_output, "Output path ('-' or empty: stdout)");

  // ---- mix ----
  auto* mix = app.add_subcommand("mix", "Overlay one CSV trace onto another, window by window");
  std::string mix_base, mix_overlay, mix_output, mix_fraction = "0.5";
  std::size_t mix_window = 10000;
  std::uint64_t mix_seed = 0;
  mix->add_option("--base", mix_base, "Base trace CSV")->required()->check(CLI::ExistingFile);
  mix->add_option("--overlay", mix_overlay, "Overlay trace CSV")->required()->check(CLI::ExistingFile);
  mix->add_option("--fraction", mix_fraction, "Overlay volume per window relative to base volume, or 'random'")
      ->capture_default_str();
  mix->add_option("--window", mix_window, "Base items per window")->capture_default_str();
  mix->add_option("--seed", mix_seed, "Interleaving seed")->capture_default_str();
  mix->add_option("-o,--output", mix_output, "Output path ('-' or empty: stdout)");

  // ---- run ----
  auto* run = app.add_subcommand("run", "Run a multi-trial experiment and write per-trial and mean CSVs");
  std::string run_config;
  run->add_option("--config", run_config,
                  "Read options from a key=value file; keys are long option names, command-line flags win")
      ->check(CLI::ExistingFile);
  std::vector<std::string> run_algorithms{"PBA", "PBASH", "ASH"};
  SyntheticFlags run_trace, run_overlay;
  std::string run_csv, run_overlay_csv, run_fraction = "0.5", run_metrics = "wre", run_output = "results.csv";
  bool run_no_shuffle = false, run_overlay_synthetic = false, run_no_rounding = false, run_no_preagg = false;
  std::size_t run_window = 10000, run_trials = 1, run_subpop_count = 100;
  std::vector<std::size_t> run_capacity{1000}, run_subpop_sizes, run_ranks;
  std::uint64_t run_seed = 0;
  std::optional<double> run_sh_threshold;
  std::vector<double> run_sh_grid;
  int run_threads = 0;

  run->add_option("-a,--algorithms", run_algorithms, "PBA, PBA_EF, PBASH, PBASH_EF, ASH, SH, EXACT or 'all'")
      ->delimiter(',')
      ->capture_default_str();
  run_trace.add(run);
  run->add_option("--csv", run_csv, "Use a CSV trace instead of a synthetic one")->check(CLI::ExistingFile);
  run->add_flag("--no-shuffle", run_no_shuffle, "Do not reshuffle the trace per trial");
  run->add_flag("--overlay-synthetic", run_overlay_synthetic, "Mix a second synthetic trace into every trial");
  run_overlay.add(run, "overlay-");
  run->add_option("--overlay-csv", run_overlay_csv, "Mix this CSV trace into every trial")->check(CLI::ExistingFile);
  run->add_option("--overlay-fraction", run_fraction, "Overlay volume per window, or 'random'")->capture_default_str();
  run->add_option("--mix-window", run_window, "Base items per mixing window")->capture_default_str();
  run->add_option("-m,--capacity", run_capacity, "Reservoir sizes")->delimiter(',')->capture_default_str();
  run->add_option("-t,--trials", run_trials, "Trials per (algorithm, m)")->capture_default_str();
  run->add_option("-s,--seed", run_seed, "Base seed")->capture_default_str();
  run->add_option("--metrics", run_metrics, "Comma list of wre, subpop_wre, rank_pr, timing, insertions")
      ->capture_default_str();
  run->add_option("--subpop-sizes", run_subpop_sizes, "Subpopulation sizes for subpop_wre")->delimiter(',');
  run->add_option("--subpop-count", run_subpop_count, "Random subpopulations per size")->capture_default_str();
  run->add_option("--ranks", run_ranks, "R values reported as prec@R and rec@R")->delimiter(',');
  run->add_flag("--no-rank-rounding", run_no_rounding, "Rank raw values instead of rounded ones");
  run->add_option("--sh-threshold", run_sh_threshold, "Fixed threshold for SH");
  run->add_option("--sh-grid", run_sh_grid, "SH thresholds to sweep; adds SH_BEST to the means")->delimiter(',');
  run->add_flag("--no-preaggregate", run_no_preagg, "Disable merging of consecutive same-key items");
  run->add_option("--threads", run_threads, "Worker threads (0: OpenMP default, 1: serial)")->capture_default_str();
  run->add_option("-o,--output", run_output, "Per-trial CSV; means go to <stem>_means<ext>")->capture_default_str();

  // ---- bench ----
  auto* bch = app.add_subcommand("bench", "Time per-item processing and count insertions per (algorithm, m)");
  std::vector<std::string> bench_algorithms{"PBA", "PBASH", "ASH"};
  SyntheticFlags bench_trace;
  std::string bench_csv, bench_output;
  std::vector<std::size_t> bench_capacity{100, 200, 500, 1000};
  std::size_t bench_repeats = 3;
  std::uint64_t bench_seed = 0;
  std::optional<double> bench_sh_threshold;
  bool bench_no_preagg = false;
  bch->add_option("-a,--algorithms", bench_algorithms, "Algorithms to time")->delimiter(',')->capture_default_str();
  bench_trace.add(bch);
  bch->add_option("--csv", bench_csv, "Use a CSV trace instead of a synthetic one")->check(CLI::ExistingFile);
  bch->add_option("-m,--capacity", bench_capacity, "Reservoir sizes")->delimiter(',')->capture_default_str();
  bch->add_option("--repeats", bench_repeats, "Timed runs after one warm-up")->capture_default_str();
  bch->add_option("-s,--seed", bench_seed, "Trace and algorithm seed")->capture_default_str();
  bch->add_option("--sh-threshold", bench_sh_threshold, "Fixed threshold for SH");
  bch->add_flag("--no-preaggregate", bench_no_preagg, "Disable merging of consecutive same-key items");
  bch->add_option("-o,--output", bench_output, "Output path ('-' or empty: stdout)");

  CLI11_PARSE(app, argc, argv);

  // Config files are merged by re-parsing with the file's entries turned into
  // flags, skipping any option already given on the command line.
  if (*run && !run_config.empty()) {
    std::vector<std::string> args{"run"};
    try {
      for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(run_config)) {
        const std::string name = item.fullname();
        if (name == "config") throw CLI::ValidationError("config", "config files cannot nest");
        const CLI::Option* opt = run->get_option_no_throw("--" + name);
        if (opt == nullptr) throw CLI::ValidationError(name, "unknown key in " + run_config);
        if (opt->count() > 0) continue;
        std::string value;
        for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
        args.push_back("--" + name + "=" + value);
      }
    } catch (const CLI::Error& e) {
      return app.exit(e);
    }
    for (int i = 1; i < argc; ++i) {
      if (std::string(argv[i]) != "run") args.emplace_back(argv[i]);
    }
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }
  }

  try {
    if (*gen) {
      SyntheticSpec s = gen_flags.spec(!gen_no_shuffle);
      s.seed = gen_seed;
      const auto items = gen_synthetic(s);
      write_to(gen_output, [&](std::ostream& out) { write_csv_trace(out, items); });
    } else if (*mix) {
      const LabeledTrace base = read_csv_trace(mix_base);
      const LabeledTrace overlay = read_csv_trace(mix_overlay);
      auto labels = base.labels;
      for (const auto& [k, label] : overlay.labels) {
        const auto [it, inserted] = labels.try_emplace(k, label);
        if (!inserted && it->second != label)
          throw std::runtime_error("key fingerprint collision between '" + it->second + "' and '" + label + "'");
      }
      const auto mixed = mix_traces(base.items, overlay.items, MixSpec{parse_fraction(mix_fraction), mix_window, mix_seed});
      write_to(mix_output, [&](std::ostream& out) { write_csv_trace(out, mixed, &labels); });
    } else if (*run) {
      ExperimentSpec spec;
      spec.algorithms = parse_modes(run_algorithms);
      if (run_csv.empty()) {
        spec.trace.synthetic = run_trace.spec(!run_no_shuffle);
      } else {
        spec.trace.kind = TraceSpec::Kind::csv;
        spec.trace.csv_path = run_csv;
      }
      spec.trace.shuffle = !run_no_shuffle;
      if (!run_overlay_csv.empty() && run_overlay_synthetic)
        throw std::invalid_argument("choose one of --overlay-csv and --overlay-synthetic");
      if (!run_overlay_csv.empty()) {
        TraceSpec overlay;
        overlay.kind = TraceSpec::Kind::csv;
        overlay.csv_path = run_overlay_csv;
        overlay.shuffle = !run_no_shuffle;
        spec.overlay = overlay;
      } else if (run_overlay_synthetic) {
        TraceSpec overlay;
        overlay.synthetic = run_overlay.spec(!run_no_shuffle, kOverlayKeyOffset);
        spec.overlay = overlay;
      }
      spec.overlay_fraction = parse_fraction(run_fraction);
      spec.mix_window = run_window;
      spec.capacity_grid = run_capacity;
      spec.trials = run_trials;
      spec.base_seed = run_seed;
      spec.metrics = parse_metrics(run_metrics);
      spec.subpop_sizes = run_subpop_sizes;
      spec.subpop_count = run_subpop_count;
      spec.rank_grid = run_ranks;
      spec.rank_rounding = !run_no_rounding;
      spec.sh_threshold = run_sh_threshold;
      spec.sh_grid = run_sh_grid;
      spec.preaggregate = !run_no_preagg;
      spec.threads = run_threads;

      const ExperimentResult result = run_experiment(spec);
      const auto means_path = write_experiment(result, run_output);
      std::cerr << "wrote " << run_output << " and " << means_path.string() << '\n';
    } else if (*bch) {
      BenchSpec spec;
      spec.algorithms = parse_modes(bench_algorithms);
      if (bench_csv.empty()) {
        spec.trace.synthetic = bench_trace.spec(true);
      } else {
        spec.trace.kind = TraceSpec::Kind::csv;
        spec.trace.csv_path = bench_csv;
      }
      spec.capacity_grid = bench_capacity;
      spec.repeats = bench_repeats;
      spec.seed = bench_seed;
      spec.sh_threshold = bench_sh_threshold;
      spec.preaggregate = !bench_no_preagg;
      const auto rows = bench(spec);
      write_to(bench_output, [&](std::ostream& out) { write_bench(out, rows); });
    }
  } catch (const std::exception& e) {
    std::cerr << "pbagg: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
