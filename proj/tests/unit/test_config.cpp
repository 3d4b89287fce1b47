#include "qmimo/config.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

using namespace qmimo;

namespace {

ExperimentSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_field(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("reference config parses to the defaults") {
  const auto ref = load_config(std::string(QMIMO_SOURCE_DIR) + "/configs/reference.toml");
  const ExperimentSpec def;
  CHECK(to_config_text(ref) == to_config_text(def));
  CHECK(config_hash(ref) == config_hash(def));
  CHECK(config_hash(ref).size() == 16);
}

TEST_CASE("values round trip through the canonical text") {
  const auto spec = parse(R"(
# comment
[experiment]
name = sweep-a
estimators = jcd, known-csi, pilot-only
trials = 7
master_seed = 99
[system]
K = 8
N = 32
T1 = 8
T2 = 40
data_constellation = circular-gaussian
[quantizer]
bits = [1, 3, inf]
step = 0.25, 0.5, 0.5
[sweep]
variable = snr_db
grid = 0:2.5:10
[gamp]
damping = 0.4
[replica]
modes = jcd, perfect-csi
rate_discount = false
)");
  CHECK(spec.name == "sweep-a");
  CHECK(spec.estimators.size() == 3);
  CHECK(spec.estimators[2] == Estimator::pilot_only);
  CHECK(spec.trials == 7);
  CHECK(spec.master_seed == 99);
  CHECK(spec.system.N == 32);
  CHECK(spec.system.data_constellation == Constellation::circular_gaussian);
  REQUIRE(spec.quantizers.size() == 3);
  CHECK(spec.quantizers[0].bits == 1);
  CHECK(spec.quantizers[0].step == 0.25);
  CHECK_FALSE(spec.quantizers[2].quantized());
  REQUIRE(spec.sweep.grid.size() == 5);
  CHECK(spec.sweep.grid[4] == doctest::Approx(10.0));
  CHECK(spec.gamp.damping == 0.4);
  CHECK(spec.replica_modes.size() == 2);
  CHECK_FALSE(spec.rate_discount);

  const auto again = parse(to_config_text(spec));
  CHECK(to_config_text(again) == to_config_text(spec));
  CHECK(config_hash(again) == config_hash(spec));
  auto changed = spec;
  changed.trials = 8;
  CHECK(config_hash(changed) != config_hash(spec));
}

TEST_CASE("errors name the offending field") {
  CHECK(error_field("[system]\nKK = 3\n") == "system.KK");
  CHECK(error_field("[bogus]\nx = 1\n") == "bogus");
  CHECK(error_field("[system]\nK = -3\n") == "system.K");
  CHECK(error_field("[system]\nK = three\n") == "system.K");
  CHECK(error_field("[quantizer]\nbits = 0\nstep = 0.5\n") == "quantizer.bits");
  CHECK(error_field("[gamp]\ndamping = 1\n") == "gamp.damping");
  CHECK(error_field("[experiment]\nestimators = magic\n") == "experiment.estimators");
  CHECK(error_field("[sweep]\nvariable = power\n") == "sweep.variable");
  CHECK(error_field("[experiment]\ntrials = 0\n") == "experiment.trials");
  CHECK_THROWS_AS(load_config("/nonexistent/qmimo.toml"), std::ios_base::failure);
}

TEST_CASE("presets") {
  const auto f2 = preset("fig2");
  CHECK(f2.system.K == 50);
  CHECK(f2.system.N == 200);
  CHECK(f2.quantizers.size() == 4);
  CHECK(f2.estimators.size() == 2);
  const auto f3 = preset("fig3");
  CHECK(f3.estimators[1] == Estimator::pilot_only);
  const auto f4 = preset("fig4");
  CHECK(f4.estimators.empty());
  CHECK(f4.sweep.variable == SweepVariable::alpha);
  CHECK(f4.system.data_constellation == Constellation::circular_gaussian);
  CHECK(f4.system.noise_var == doctest::Approx(0.1));
  for (const auto* name : {"fig2", "fig3", "fig4"}) CHECK_NOTHROW(preset(name).validate());
  CHECK_THROWS_AS(preset("fig9"), ConfigError);
}
