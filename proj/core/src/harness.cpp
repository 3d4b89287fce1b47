#include "qmimo/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#ifndef QMIMO_BUILD_ID
#define QMIMO_BUILD_ID "qmimo-unknown"
#endif

namespace qmimo {

namespace {

constexpr const char* kSchema = "v1";

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers pulling indices from
// a shared counter. The first exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn, const std::function<void(int, int)>& progress) {
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
      const int d = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(error_mutex);
        progress(d, n);
      }
    }
  };
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

TrialMetrics evaluate(Estimator estimator, const BlockInstance& block,
                      const SystemConfig& system, const GampOptions& gamp) {
  TrialMetrics m;
  bool converged = true;
  switch (estimator) {
    case Estimator::jcd: {
      const auto r = jcd_estimate(block.Ytilde, block.X1, system, gamp);
      m = ber_qpsk(r.x2hat_hard, block.X2);
      m.sq_err_x2 = (r.x2hat_soft - block.X2).squaredNorm();
      m.sq_err_h = (r.hhat - block.H).squaredNorm();
      m.entries_h = block.H.size();
      converged = r.converged;
      break;
    }
    case Estimator::pilot_only: {
      const auto r = pilot_only_pipeline(block.Ytilde, block.X1, system, gamp);
      m = ber_qpsk(r.detection.xhat_hard, block.X2);
      m.sq_err_x2 = (r.detection.xhat_soft - block.X2).squaredNorm();
      m.sq_err_h = (r.hhat - block.H).squaredNorm();
      m.entries_h = block.H.size();
      converged = r.detection.converged;
      break;
    }
    case Estimator::known_csi: {
      const auto data = block.Ytilde.columns(system.T1, system.T2);
      const auto r = detect_known_channel(data, block.H, system, gamp);
      m = ber_qpsk(r.xhat_hard, block.X2);
      m.sq_err_x2 = (r.xhat_soft - block.X2).squaredNorm();
      converged = r.converged;
      break;
    }
  }
  if (system.data_constellation != Constellation::qpsk) {
    m.bits_in_error = 0;
    m.bits_counted = 0;
  }
  m.entries_x2 = block.X2.size();
  m.trials = 1;
  m.nonconverged = converged ? 0 : 1;
  return m;
}

struct Prediction {
  std::optional<double> ber;
  double mse_x2 = 0.0;
  double mse_h = 0.0;
  double rate = 0.0;
};

Prediction predict(const ReplicaConfig& cfg, bool rate_discount) {
  const ReplicaSolution sol = cfg.mode == ReplicaMode::jcd ? solve_fixed_point(cfg)
                                                           : solve_perfect_csi(cfg);
  Prediction p;
  if (cfg.data_prior == Constellation::qpsk) p.ber = predict_ber_qpsk(sol.qt_x2);
  p.mse_x2 = sol.mse_x2;
  p.mse_h = sol.mse_h;
  p.rate = achievable_rate(sol.qt_x2, cfg.x2_prior(), rate_discount ? cfg.beta1 : 0.0, cfg.beta2);
  return p;
}

std::string cell(std::optional<double> v) {
  return v && std::isfinite(*v) ? fmt::format("{:.17g}", *v) : std::string();
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const char* build_id() { return QMIMO_BUILD_ID; }

std::string bits_label(const QuantizerSpec& spec) {
  return spec.quantized() ? std::to_string(spec.bits) : std::string("inf");
}

double noise_var_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

SystemConfig system_at(const ExperimentSpec& spec, const QuantizerSpec& quantizer,
                       double sweep_value) {
  SystemConfig sys = spec.system;
  sys.quantizer = quantizer;
  if (spec.sweep.variable == SweepVariable::snr_db) {
    sys.noise_var = noise_var_from_snr_db(sweep_value);
  } else {
    sys.N = std::max(1, static_cast<int>(std::lround(sweep_value * sys.K)));
  }
  return sys;
}

ReplicaConfig replica_config_at(const ExperimentSpec& spec, const QuantizerSpec& quantizer,
                                double sweep_value, ReplicaMode mode) {
  ReplicaConfig cfg = ReplicaConfig::from_system(system_at(spec, quantizer, sweep_value), mode);
  if (spec.sweep.variable == SweepVariable::alpha) cfg.alpha = sweep_value;
  return cfg;
}

TrialMetrics run_trial(Estimator estimator, const SystemConfig& system, const GampOptions& gamp,
                       SeedSpec seed) {
  return evaluate(estimator, generate_block(system, seed), system, gamp);
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
  spec.validate();
  const int threads = resolve_threads(opts.threads);
  const std::size_t n_est = spec.estimators.size();

  struct Point {
    QuantizerSpec quantizer;
    double value;
  };
  std::vector<Point> points;
  for (const auto& q : spec.quantizers) {
    for (double g : spec.sweep.grid) points.push_back({q, g});
  }

  // Replica predictions, one per (point, estimator) or per (point, mode)
  // when no estimator runs.
  std::vector<std::vector<std::optional<Prediction>>> preds(points.size());
  if (spec.replica) {
    const std::size_t per_point = n_est > 0 ? n_est : spec.replica_modes.size();
    for (auto& p : preds) p.resize(per_point);
    parallel_for(
        static_cast<int>(points.size() * per_point), threads,
        [&](int k) {
          const std::size_t pi = static_cast<std::size_t>(k) / per_point;
          const std::size_t j = static_cast<std::size_t>(k) % per_point;
          ReplicaMode mode = ReplicaMode::jcd;
          if (n_est > 0) {
            if (spec.estimators[j] == Estimator::pilot_only) return;
            if (spec.estimators[j] == Estimator::known_csi) mode = ReplicaMode::perfect_csi;
          } else {
            mode = spec.replica_modes[j];
          }
          preds[pi][j] = predict(
              replica_config_at(spec, points[pi].quantizer, points[pi].value, mode),
              spec.rate_discount);
        },
        {});
  }

  std::vector<ResultRow> rows;
  const int total = static_cast<int>(points.size()) * spec.trials;
  int done_before = 0;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const auto& pt = points[pi];
    std::vector<TrialMetrics> merged(n_est);
    std::vector<double> seconds(n_est, 0.0);
    if (n_est > 0) {
      const SystemConfig sys = system_at(spec, pt.quantizer, pt.value);
      std::vector<std::vector<TrialMetrics>> per_trial(
          static_cast<std::size_t>(spec.trials), std::vector<TrialMetrics>(n_est));
      std::vector<std::vector<double>> per_time(static_cast<std::size_t>(spec.trials),
                                                std::vector<double>(n_est, 0.0));
      std::function<void(int, int)> progress;
      if (opts.progress) {
        progress = [&](int d, int) { opts.progress(done_before + d, total); };
      }
      parallel_for(
          spec.trials, threads,
          [&](int t) {
            const auto block = generate_block(
                sys, SeedSpec{spec.master_seed, static_cast<std::uint64_t>(t)});
            for (std::size_t e = 0; e < n_est; ++e) {
              const auto start = std::chrono::steady_clock::now();
              per_trial[static_cast<std::size_t>(t)][e] =
                  evaluate(spec.estimators[e], block, sys, spec.gamp);
              per_time[static_cast<std::size_t>(t)][e] =
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
          },
          progress);
      // Reduction in trial order keeps floating sums independent of scheduling.
      for (std::size_t t = 0; t < per_trial.size(); ++t) {
        for (std::size_t e = 0; e < n_est; ++e) {
          merged[e].merge(per_trial[t][e]);
          seconds[e] += per_time[t][e];
        }
      }
      done_before += spec.trials;
    }

    const std::size_t n_rows = n_est > 0 ? n_est : (spec.replica ? spec.replica_modes.size() : 0);
    for (std::size_t j = 0; j < n_rows; ++j) {
      ResultRow row;
      row.experiment = spec.name;
      row.bits = bits_label(pt.quantizer);
      row.sweep_variable = to_string(spec.sweep.variable);
      row.sweep_value = pt.value;
      if (n_est > 0) {
        row.estimator = to_string(spec.estimators[j]);
        row.empirical = merged[j];
        if (opts.timing) row.wall_time = seconds[j];
      } else {
        row.estimator = "replica-" + to_string(spec.replica_modes[j]);
      }
      if (spec.replica && preds[pi][j]) {
        const auto& p = *preds[pi][j];
        row.ber_pred = p.ber;
        row.mse_x2_pred = p.mse_x2;
        row.mse_h_pred = p.mse_h;
        row.rate_pred = p.rate;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ReplicaRow> run_replica_sweep(const ExperimentSpec& spec, const RunOptions& opts) {
  spec.validate();
  struct Item {
    QuantizerSpec quantizer;
    double value;
    ReplicaMode mode;
  };
  std::vector<Item> items;
  for (const auto& q : spec.quantizers) {
    for (double g : spec.sweep.grid) {
      for (auto mode : spec.replica_modes) items.push_back({q, g, mode});
    }
  }
  std::vector<ReplicaRow> rows(items.size());
  parallel_for(
      static_cast<int>(items.size()), resolve_threads(opts.threads),
      [&](int k) {
        const auto& it = items[static_cast<std::size_t>(k)];
        const ReplicaConfig cfg = replica_config_at(spec, it.quantizer, it.value, it.mode);
        ReplicaRow& row = rows[static_cast<std::size_t>(k)];
        row.mode = it.mode;
        row.bits = bits_label(it.quantizer);
        row.snr_db = -10.0 * std::log10(cfg.noise_var);
        row.alpha = cfg.alpha;
        row.solution = it.mode == ReplicaMode::jcd ? solve_fixed_point(cfg) : solve_perfect_csi(cfg);
        row.ber_pred = cfg.data_prior == Constellation::qpsk
                           ? predict_ber_qpsk(row.solution.qt_x2)
                           : std::numeric_limits<double>::quiet_NaN();
        row.rate_pred = achievable_rate(row.solution.qt_x2, cfg.x2_prior(),
                                        spec.rate_discount ? cfg.beta1 : 0.0, cfg.beta2);
      },
      opts.progress);
  return rows;
}

void write_results_csv(std::ostream& out, const ExperimentSpec& spec,
                       const std::vector<ResultRow>& rows) {
  const std::string hash = config_hash(spec);
  out << "schema,experiment,estimator,bits,sweep_variable,sweep_value,trials,nonconverged,ber,"
         "ber_pred,mse_x2,mse_x2_pred,mse_h,mse_h_pred,rate_pred,wall_time,config_hash,"
         "master_seed,build_id\n";
  for (const auto& r : rows) {
    std::string trials, nonconv;
    std::optional<double> ber, mse_x2, mse_h;
    if (r.empirical) {
      trials = std::to_string(r.empirical->trials);
      nonconv = std::to_string(r.empirical->nonconverged);
      ber = r.empirical->ber();
      mse_x2 = r.empirical->mse_x2();
      mse_h = r.empirical->mse_h();
    }
    out << fmt::format("{},{},{},{},{},{:.17g},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", kSchema,
                       csv_text(r.experiment), r.estimator, r.bits, r.sweep_variable,
                       r.sweep_value, trials, nonconv, cell(ber), cell(r.ber_pred), cell(mse_x2),
                       cell(r.mse_x2_pred), cell(mse_h), cell(r.mse_h_pred), cell(r.rate_pred),
                       cell(r.wall_time), hash, spec.master_seed, build_id());
  }
}

void write_replica_csv(std::ostream& out, const ExperimentSpec& spec,
                       const std::vector<ReplicaRow>& rows) {
  const std::string hash = config_hash(spec);
  out << "schema,mode,bits,snr_db,alpha,q_H,q_X2,qt_H,qt_X2,mse_H,mse_X2,ber_pred,rate_pred,"
         "free_entropy,converged,config_hash,build_id\n";
  for (const auto& r : rows) {
    const auto& s = r.solution;
    out << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{:.17g},{:.17g},{:.17g},{},"
                       "{:.17g},{:.17g},{},{},{}\n",
                       kSchema, to_string(r.mode), r.bits, r.snr_db, r.alpha, s.q_h, s.q_x2,
                       std::isfinite(s.qt_h) ? fmt::format("{:.17g}", s.qt_h) : "inf", s.qt_x2,
                       s.mse_h, s.mse_x2, cell(r.ber_pred), r.rate_pred, s.free_entropy,
                       s.converged ? "true" : "false", hash, build_id());
  }
}

}  // namespace qmimo
