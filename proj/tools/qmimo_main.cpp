// qmimo: Monte-Carlo and replica sweeps for quantized massive MIMO.
//
//   qmimo simulate --config run.toml --out results.csv [--trials N] [--seed S] [--threads T]
//   qmimo replica  --config run.toml --out replica.csv
//   qmimo preset fig2 --out fig2.csv [--trials N]
//
// Exit codes: 0 success, 2 config error, 3 I/O error.

#include "qmimo/config.hpp"
#include "qmimo/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr int kConfigError = 2;
constexpr int kIoError = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool timing = false;
  bool quiet = false;
};

void apply(qmimo::ExperimentSpec& spec, const Overrides& o) {
  if (o.trials) spec.trials = *o.trials;
  if (o.seed) spec.master_seed = *o.seed;
  spec.validate();
}

qmimo::RunOptions run_options(const Overrides& o) {
  qmimo::RunOptions opts;
  opts.threads = o.threads;
  opts.timing = o.timing;
  if (!o.quiet) {
    opts.progress = [last = -1](int done, int total) mutable {
      const int pct = total > 0 ? 100 * done / total : 100;
      if (pct != last) {
        last = pct;
        std::fprintf(stderr, "\r%3d%% (%d/%d)", pct, done, total);
        if (done == total) std::fputc('\n', stderr);
      }
    };
  }
  return opts;
}

// Callers render the CSV in memory, so a failed run leaves no partial file.
void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

qmimo::ExperimentSpec load(const std::string& path) {
  try {
    return qmimo::load_config(path);
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  }
}

void run_simulation(const qmimo::ExperimentSpec& spec, const Overrides& o,
                    const std::string& out) {
  std::ostringstream csv;
  if (spec.estimators.empty()) {
    qmimo::write_replica_csv(csv, spec, qmimo::run_replica_sweep(spec, run_options(o)));
  } else {
    qmimo::write_results_csv(csv, spec, qmimo::run_experiment(spec, run_options(o)));
  }
  write_file(out, csv.str());
}

void add_overrides(CLI::App* cmd, Overrides& o, bool monte_carlo) {
  if (monte_carlo) {
    cmd->add_option("--trials", o.trials, "Override the number of trials")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "Override the master seed");
    cmd->add_flag("--timing", o.timing, "Fill the wall_time column (run-dependent output)");
  }
  cmd->add_option("--threads", o.threads, "Worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("-q,--quiet", o.quiet, "No progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized massive-MIMO joint channel-and-data estimation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qmimo::build_id()));

  std::string config_path;
  std::string out_path;
  std::string preset_name;
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo sweep from a config file");
  simulate->add_option("--config", config_path, "Experiment config")->required();
  simulate->add_option("--out", out_path, "Output CSV")->required();
  add_overrides(simulate, o, true);

  auto* replica = app.add_subcommand("replica", "Replica predictions from a config file");
  replica->add_option("--config", config_path, "Experiment config")->required();
  replica->add_option("--out", out_path, "Output CSV")->required();
  add_overrides(replica, o, false);

  auto* preset = app.add_subcommand("preset", "Run a built-in figure experiment");
  preset->add_option("name", preset_name, "fig2, fig3 or fig4")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
  preset->add_option("--out", out_path, "Output CSV")->required();
  add_overrides(preset, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*simulate) {
      auto spec = load(config_path);
      apply(spec, o);
      run_simulation(spec, o, out_path);
    } else if (*replica) {
      auto spec = load(config_path);
      apply(spec, o);
      std::ostringstream csv;
      qmimo::write_replica_csv(csv, spec, qmimo::run_replica_sweep(spec, run_options(o)));
      write_file(out_path, csv.str());
    } else if (*preset) {
      auto spec = qmimo::preset(preset_name);
      apply(spec, o);
      run_simulation(spec, o, out_path);
    }
  } catch (const qmimo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return 0;
}
