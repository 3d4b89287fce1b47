#include "qmimo/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

using namespace qmimo;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.name = "small";
  s.system.K = 4;
  s.system.N = 16;
  s.system.T1 = 4;
  s.system.T2 = 12;
  s.quantizers = {make_quantizer(2, 0.7), make_unquantized()};
  s.estimators = {Estimator::jcd, Estimator::pilot_only, Estimator::known_csi};
  s.sweep.grid = {5.0, 15.0};
  s.trials = 6;
  s.master_seed = 17;
  return s;
}

std::string results_csv(const ExperimentSpec& spec, int threads) {
  RunOptions o;
  o.threads = threads;
  std::ostringstream out;
  write_results_csv(out, spec, run_experiment(spec, o));
  return out.str();
}

}  // namespace

TEST_CASE("sweep helpers") {
  CHECK(noise_var_from_snr_db(10.0) == doctest::Approx(0.1));
  CHECK(noise_var_from_snr_db(0.0) == doctest::Approx(1.0));
  CHECK(bits_label(make_quantizer(3, 0.5)) == "3");
  CHECK(bits_label(make_unquantized()) == "inf");
  auto spec = small_spec();
  const auto sys = system_at(spec, spec.quantizers[0], 20.0);
  CHECK(sys.noise_var == doctest::Approx(0.01));
  CHECK(sys.quantizer.bits == 2);
  spec.sweep.variable = SweepVariable::alpha;
  const auto a = system_at(spec, spec.quantizers[0], 2.6);
  CHECK(a.N == 10);
  CHECK(replica_config_at(spec, spec.quantizers[0], 2.6, ReplicaMode::jcd).alpha ==
        doctest::Approx(2.6));
}

TEST_CASE("known channel at high snr makes no errors") {
  SystemConfig s;
  s.K = 4;
  s.N = 32;
  s.T1 = 4;
  s.T2 = 20;
  s.noise_var = 1e-4;
  TrialMetrics m;
  for (std::uint64_t t = 0; t < 10; ++t) m.merge(run_trial(Estimator::known_csi, s, {}, {1, t}));
  CHECK(m.trials == 10);
  CHECK(m.bits_counted == 10 * 4 * 20 * 2);
  CHECK(m.bits_in_error == 0);
  CHECK(m.mse_x2() < 1e-2);
  CHECK(m.entries_h == 0);
}

TEST_CASE("rows carry predictions where they exist") {
  const auto spec = small_spec();
  const auto rows = run_experiment(spec, {.threads = 1});
  CHECK(rows.size() == 2 * 2 * 3);
  for (const auto& r : rows) {
    REQUIRE(r.empirical);
    CHECK(r.empirical->trials == 6);
    CHECK_FALSE(r.wall_time);
    if (r.estimator == "pilot-only") {
      CHECK_FALSE(r.ber_pred);
    } else {
      REQUIRE(r.ber_pred);
      CHECK(*r.ber_pred >= 0.0);
      CHECK(*r.ber_pred <= 0.5);
    }
    if (r.estimator == "known-csi") CHECK(*r.mse_h_pred == 0.0);
  }
}

TEST_CASE("csv output is reproducible and independent of the thread count") {
  const auto spec = small_spec();
  const auto one = results_csv(spec, 1);
  CHECK(one == results_csv(spec, 1));
  CHECK(one == results_csv(spec, 4));
  std::istringstream in(one);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header.rfind("schema,experiment,estimator,bits,", 0) == 0);
  CHECK(header.find("config_hash,master_seed,build_id") != std::string::npos);
  CHECK(first.rfind("v1,small,", 0) == 0);
  CHECK(first.find(config_hash(spec)) != std::string::npos);
  CHECK(first.find(build_id()) != std::string::npos);
  auto other = spec;
  other.master_seed = 18;
  CHECK(results_csv(other, 1) != one);
}

TEST_CASE("replica-only runs") {
  auto spec = small_spec();
  spec.estimators.clear();
  spec.replica_modes = {ReplicaMode::jcd, ReplicaMode::perfect_csi};
  const auto rows = run_replica_sweep(spec);
  CHECK(rows.size() == 2 * 2 * 2);
  for (const auto& r : rows) {
    CHECK(r.solution.converged);
    if (r.mode == ReplicaMode::perfect_csi) CHECK(r.solution.mse_h == 0.0);
  }
  std::ostringstream out;
  write_replica_csv(out, spec, rows);
  CHECK(out.str().rfind("schema,mode,bits,snr_db,alpha,", 0) == 0);
  const auto results = run_experiment(spec);
  CHECK(results.size() == rows.size());
  CHECK(results.front().estimator == "replica-jcd");
}
