#pragma once

#include "qmimo/estimators.hpp"
#include "qmimo/model.hpp"
#include "qmimo/replica.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qmimo {

enum class Estimator { jcd, pilot_only, known_csi };
enum class SweepVariable { snr_db, alpha };

std::string to_string(Estimator e);
std::string to_string(SweepVariable v);

struct SweepSpec {
  SweepVariable variable = SweepVariable::snr_db;
  std::vector<double> grid{10.0};
};

/// One experiment: a sweep over `grid` for every quantizer in `quantizers`.
/// `system.quantizer` and `system.noise_var` (or `system.N` for an alpha
/// sweep) are overwritten per sweep point.
struct ExperimentSpec {
  std::string name = "experiment";
  SystemConfig system;
  std::vector<QuantizerSpec> quantizers{make_unquantized()};
  std::vector<Estimator> estimators{Estimator::jcd};
  SweepSpec sweep;
  int trials = 100;
  std::uint64_t master_seed = 1;
  bool replica = true;
  std::vector<ReplicaMode> replica_modes{ReplicaMode::jcd};
  bool rate_discount = true;  // multiply rates by beta2 / (beta1 + beta2)
  GampOptions gamp;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Parses the sectioned key/value format documented in configs/reference.toml.
/// Unknown sections or keys and malformed values raise ConfigError.
ExperimentSpec parse_config(std::istream& in);
ExperimentSpec load_config(const std::string& path);

/// Canonical text form; parse_config(to_config_text(s)) reproduces s.
std::string to_config_text(const ExperimentSpec& spec);

/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentSpec& spec);

/// Built-in experiments: "fig2", "fig3" or "fig4". Throws ConfigError for
/// any other name.
ExperimentSpec preset(std::string_view name);

}  // namespace qmimo
