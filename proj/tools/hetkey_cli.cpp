// hetkey: derive | threshold | sweep | trial

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hetkey/analysis.hpp"
#include "hetkey/config.hpp"
#include "hetkey/graphgen.hpp"
#include "hetkey/model.hpp"
#include "hetkey/montecarlo.hpp"
#include "hetkey/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out_path;
  std::uint64_t trial_index = 0;
  std::string dump_path;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

hetkey::Config load(const Options& opts) {
  hetkey::Config cfg = hetkey::load_config(opts.config_path);
  if (opts.seed) cfg.run.master_seed = *opts.seed;
  if (opts.workers) {
    if (*opts.workers == 0) throw hetkey::ConfigError("--workers", "must be >= 1");
    cfg.run.workers = *opts.workers;
  }
  if (!opts.out_path.empty()) cfg.run.output_path = opts.out_path;
  return cfg;
}

// Writes through a sibling temporary and renames on success, so a failed
// run never leaves a truncated file at `path`.
template <class Writer>
void write_file_atomically(const std::string& path, Writer&& writer) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".partial";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
      writer(out);
      out.flush();
      if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
  } catch (const std::filesystem::filesystem_error& e) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw IoError("cannot write '" + path + "': " + e.code().message());
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
}

int cmd_derive(const Options& opts) {
  const hetkey::Config cfg = load(opts);
  const auto dq = hetkey::derive(cfg.model);
  hetkey::write_derived_table(std::cout, cfg.model, dq);
  return kExitOk;
}

int cmd_threshold(const Options& opts) {
  const hetkey::Config cfg = load(opts);
  const hetkey::ExperimentSpec spec = cfg.experiment();
  const auto threshold = hetkey::predicted_threshold(spec);
  const auto [lo, hi] = std::minmax_element(spec.values.begin(), spec.values.end());

  auto emit = [&](std::ostream& os) {
    os << "sweep_axis,range_low,range_high,threshold\n";
    os << spec.axis.name() << ',' << hetkey::format_real(*lo) << ',' << hetkey::format_real(*hi) << ','
       << (threshold ? hetkey::format_real(*threshold) : std::string("none")) << '\n';
  };
  // run.output_path names the sweep CSV; only an explicit --out redirects this.
  if (opts.out_path.empty()) {
    emit(std::cout);
  } else {
    write_file_atomically(opts.out_path, emit);
  }
  std::cerr << "predicted threshold for " << spec.axis.name() << ": "
            << (threshold ? hetkey::format_real(*threshold) : std::string("none in range")) << '\n';
  return kExitOk;
}

void print_sweep_summary(std::ostream& os, const hetkey::SweepResult& sweep) {
  os << "rows: " << sweep.rows.size() << '\n';
  os << "predicted threshold (" << sweep.axis << "): "
     << (sweep.predicted_threshold ? hetkey::format_real(*sweep.predicted_threshold)
                                   : std::string("none in range"))
     << '\n';
  if (const auto transition = hetkey::transition_interval(sweep)) {
    os << "connectivity transition (p <= 0.10 to p >= 0.95): [" << hetkey::format_real(transition->low)
       << ", " << hetkey::format_real(transition->high) << "]";
    if (sweep.predicted_threshold) {
      const bool inside =
          *sweep.predicted_threshold > transition->low && *sweep.predicted_threshold < transition->high;
      os << (inside ? ", threshold inside" : ", threshold outside");
    }
    os << '\n';
  } else {
    os << "connectivity transition: not observed in range\n";
  }
}

int cmd_sweep(const Options& opts) {
  const hetkey::Config cfg = load(opts);
  const hetkey::ExperimentSpec spec = cfg.experiment();
  const auto sweep = hetkey::run_sweep(spec, cfg.run.workers);
  if (cfg.run.output_path.empty()) {
    hetkey::write_sweep_csv(std::cout, sweep);
    print_sweep_summary(std::cerr, sweep);
  } else {
    write_file_atomically(cfg.run.output_path,
                          [&](std::ostream& os) { hetkey::write_sweep_csv(os, sweep); });
    std::cout << "wrote " << cfg.run.output_path << '\n';
    print_sweep_summary(std::cout, sweep);
  }
  return kExitOk;
}

int cmd_trial(const Options& opts) {
  const hetkey::Config cfg = load(opts);
  hetkey::RngStream rng(cfg.run.master_seed, opts.trial_index);
  const auto graph = hetkey::generate(cfg.model, rng);
  const auto outcome = hetkey::analyze(graph);

  std::cout << "seed = " << cfg.run.master_seed << ", stream = " << opts.trial_index << '\n';
  std::cout << "edges = " << outcome.edge_count << '\n';
  std::cout << "isolated = " << outcome.isolated_count << " (per class:";
  for (auto c : outcome.class_isolated_counts) std::cout << ' ' << c;
  std::cout << ")\n";
  std::cout << "connected = " << (outcome.is_connected ? "yes" : "no")
            << ", components = " << outcome.component_count
            << ", largest = " << outcome.largest_component << '\n';
  std::cout << "intra-class edges:";
  for (auto c : outcome.intra_class_edge_counts) std::cout << ' ' << c;
  std::cout << '\n';

  if (!opts.dump_path.empty()) {
    write_file_atomically(opts.dump_path,
                          [&](std::ostream& os) { hetkey::write_edge_list(os, graph); });
    std::cout << "graph written to " << opts.dump_path << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure connectivity of heterogeneous key-predistribution networks over on/off channels"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opts;
  app.add_option("--config", opts.config_path, "Experiment configuration (JSON)")->required();
  app.add_option("--seed", opts.seed, "Master seed (overrides run.master_seed)");
  app.add_option("--workers", opts.workers, "Worker threads (overrides run.workers)");
  app.add_option("--out", opts.out_path, "Output path (overrides run.output_path)");

  auto* derive = app.add_subcommand("derive", "Print exact edge probabilities, Lambda, m/d/s and c_n");
  auto* threshold = app.add_subcommand("threshold", "Print the predicted critical value of the swept parameter");
  auto* sweep = app.add_subcommand("sweep", "Run the Monte Carlo sweep and write CSV");
  auto* trial = app.add_subcommand("trial", "Sample and analyze a single graph");
  trial->add_option("--trial-index", opts.trial_index, "Stream index of the sampled graph");
  trial->add_option("--dump", opts.dump_path, "Write the sampled graph as an edge list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*derive) return cmd_derive(opts);
    if (*threshold) return cmd_threshold(opts);
    if (*sweep) return cmd_sweep(opts);
    if (*trial) return cmd_trial(opts);
  } catch (const hetkey::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hetkey::InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
