#pragma once

#include "qmimo/config.hpp"
#include "qmimo/metrics.hpp"
#include "qmimo/replica.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qmimo {

/// "qmimo-<version>-<git describe>" of the library build.
const char* build_id();

/// Label used in CSV output: the bit count, or "inf" when unquantized.
std::string bits_label(const QuantizerSpec& spec);

/// Noise variance for an SNR in dB, SNR = 1 / noise_var.
double noise_var_from_snr_db(double snr_db);

/// The system used at one sweep point.
SystemConfig system_at(const ExperimentSpec& spec, const QuantizerSpec& quantizer,
                       double sweep_value);

struct ResultRow {
  std::string experiment;
  std::string estimator;
  std::string bits;
  std::string sweep_variable;
  double sweep_value = 0.0;
  std::optional<TrialMetrics> empirical;
  std::optional<double> ber_pred;
  std::optional<double> mse_x2_pred;
  std::optional<double> mse_h_pred;
  std::optional<double> rate_pred;
  std::optional<double> wall_time;  // seconds, only with RunOptions::timing
};

struct ReplicaRow {
  ReplicaMode mode = ReplicaMode::jcd;
  std::string bits;
  double snr_db = 0.0;
  double alpha = 0.0;
  ReplicaSolution solution;
  double ber_pred = 0.0;
  double rate_pred = 0.0;
};

struct RunOptions {
  int threads = 0;      // 0: hardware concurrency
  bool timing = false;  // fill wall_time (makes output run-dependent)
  std::function<void(int done, int total)> progress;
};

/// Outcome of one estimator on one block.
TrialMetrics run_trial(Estimator estimator, const SystemConfig& system, const GampOptions& gamp,
                       SeedSpec seed);

/// Replica configuration for one sweep point.
ReplicaConfig replica_config_at(const ExperimentSpec& spec, const QuantizerSpec& quantizer,
                                double sweep_value, ReplicaMode mode);

/// Monte-Carlo sweep. Trial t of every sweep point uses stream id t, so
/// estimators and sweep points see paired realizations. Output does not
/// depend on the thread count.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {});

/// Replica predictions for every (quantizer, sweep point, mode).
std::vector<ReplicaRow> run_replica_sweep(const ExperimentSpec& spec, const RunOptions& opts = {});

void write_results_csv(std::ostream& out, const ExperimentSpec& spec,
                       const std::vector<ResultRow>& rows);
void write_replica_csv(std::ostream& out, const ExperimentSpec& spec,
                       const std::vector<ReplicaRow>& rows);

}  // namespace qmimo
