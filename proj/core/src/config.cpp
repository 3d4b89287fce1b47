#include "qmimo/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace qmimo {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"name", "estimators", "trials", "master_seed", "replica"}},
      {"system",
       {"K", "N", "T1", "T2", "noise_var", "channel_var", "pilot_power", "data_power",
        "data_constellation"}},
      {"quantizer", {"bits", "step", "unquantized"}},
      {"sweep", {"variable", "grid"}},
      {"gamp", {"max_iter", "tol", "damping", "variance_floor", "variance_ceiling"}},
      {"replica", {"modes", "rate_discount"}},
  };
  return keys;
}

std::string unquote(std::string s) {
  boost::trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split_list(const std::string& raw) {
  std::string s = raw;
  boost::trim(s);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    auto v = unquote(p);
    if (!v.empty()) out.push_back(v);
  }
  return out;
}

double parse_double(const std::string& field, const std::string& text) {
  const std::string s = unquote(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(field, "expected a finite number, got '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& field, const std::string& text) {
  const std::string s = unquote(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(field, "expected an integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& field, const std::string& text) {
  const std::string s = boost::to_lower_copy(unquote(text));
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(field, "expected true or false, got '" + s + "'");
}

// "a, b, c" or "start:step:stop" (inclusive, tolerant to rounding).
std::vector<double> parse_grid(const std::string& field, const std::string& text) {
  const std::string s = unquote(text);
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    boost::split(parts, s, boost::is_any_of(":"));
    if (parts.size() != 3) throw ConfigError(field, "range must be start:step:stop");
    const double a = parse_double(field, parts[0]);
    const double step = parse_double(field, parts[1]);
    const double b = parse_double(field, parts[2]);
    if (step <= 0.0 || b < a) throw ConfigError(field, "range needs step > 0 and stop >= start");
    const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9));
    if (n > 100000) throw ConfigError(field, "range has too many points");
    std::vector<double> grid;
    for (long long i = 0; i <= n; ++i) grid.push_back(a + static_cast<double>(i) * step);
    return grid;
  }
  std::vector<double> grid;
  for (const auto& item : split_list(s)) grid.push_back(parse_double(field, item));
  return grid;
}

Estimator parse_estimator(const std::string& field, const std::string& s) {
  if (s == "jcd") return Estimator::jcd;
  if (s == "pilot-only") return Estimator::pilot_only;
  if (s == "known-csi") return Estimator::known_csi;
  throw ConfigError(field, "unknown estimator '" + s + "' (jcd, pilot-only, known-csi)");
}

ReplicaMode parse_mode(const std::string& field, const std::string& s) {
  if (s == "jcd") return ReplicaMode::jcd;
  if (s == "perfect-csi") return ReplicaMode::perfect_csi;
  throw ConfigError(field, "unknown replica mode '" + s + "' (jcd, perfect-csi)");
}

Constellation parse_constellation(const std::string& field, const std::string& s) {
  if (s == "qpsk") return Constellation::qpsk;
  if (s == "circular-gaussian") return Constellation::circular_gaussian;
  throw ConfigError(field, "unknown constellation '" + s + "' (qpsk, circular-gaussian)");
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

template <class T, class F>
std::string join(const std::vector<T>& items, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += f(items[i]);
  }
  return out;
}

// Strips '#' comment lines so TOML-style files parse with the INI reader.
std::string strip_hash_comments(std::istream& in) {
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') continue;
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::jcd:
      return "jcd";
    case Estimator::pilot_only:
      return "pilot-only";
    case Estimator::known_csi:
      return "known-csi";
  }
  return "unknown";
}

std::string to_string(SweepVariable v) { return v == SweepVariable::snr_db ? "snr_db" : "alpha"; }

void ExperimentSpec::validate() const {
  if (name.empty()) throw ConfigError("experiment.name", "must not be empty");
  if (trials < 1) throw ConfigError("experiment.trials", "must be >= 1");
  if (estimators.empty() && !replica) {
    throw ConfigError("experiment.estimators", "nothing to run: no estimators and replica = false");
  }
  if (quantizers.empty()) throw ConfigError("quantizer.bits", "must list at least one entry");
  if (sweep.grid.empty()) throw ConfigError("sweep.grid", "must not be empty");
  for (double g : sweep.grid) {
    if (!std::isfinite(g)) throw ConfigError("sweep.grid", "entries must be finite");
    if (sweep.variable == SweepVariable::alpha && g <= 0.0) {
      throw ConfigError("sweep.grid", "alpha values must be positive");
    }
  }
  if (replica && replica_modes.empty()) throw ConfigError("replica.modes", "must not be empty");
  if (gamp.max_iter < 1) throw ConfigError("gamp.max_iter", "must be >= 1");
  if (!(gamp.tol > 0.0)) throw ConfigError("gamp.tol", "must be positive");
  if (!(gamp.damping >= 0.0 && gamp.damping < 1.0)) {
    throw ConfigError("gamp.damping", "must lie in [0, 1)");
  }
  if (!(gamp.variance_floor > 0.0)) throw ConfigError("gamp.variance_floor", "must be positive");
  if (!(gamp.variance_ceiling > gamp.variance_floor)) {
    throw ConfigError("gamp.variance_ceiling", "must exceed variance_floor");
  }
  try {
    system.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.substr(0, msg.find(':')), msg.substr(msg.find(':') + 2));
  }
  const bool needs_pilots = std::find(estimators.begin(), estimators.end(),
                                      Estimator::pilot_only) != estimators.end();
  if (needs_pilots && system.T1 < system.K) {
    throw ConfigError("system.T1", "pilot-only estimation needs T1 >= K");
  }
}

ExperimentSpec parse_config(std::istream& in) {
  pt::ptree tree;
  std::istringstream filtered(strip_hash_comments(in));
  try {
    pt::read_ini(filtered, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("line {}", e.line()), e.message());
  }

  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (body.empty()) throw ConfigError(section, "keys must appear inside a [section]");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
  }

  ExperimentSpec spec;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };

  if (auto v = get("experiment.name")) spec.name = unquote(*v);
  if (auto v = get("experiment.estimators")) {
    spec.estimators.clear();
    for (const auto& s : split_list(*v)) {
      spec.estimators.push_back(parse_estimator("experiment.estimators", s));
    }
  }
  if (auto v = get("experiment.trials")) {
    spec.trials = static_cast<int>(parse_int("experiment.trials", *v));
  }
  if (auto v = get("experiment.master_seed")) {
    const auto seed = parse_int("experiment.master_seed", *v);
    if (seed < 0) throw ConfigError("experiment.master_seed", "must be >= 0");
    spec.master_seed = static_cast<std::uint64_t>(seed);
  }
  if (auto v = get("experiment.replica")) spec.replica = parse_bool("experiment.replica", *v);

  auto& sys = spec.system;
  auto int_key = [&](const char* key, int& dst) {
    if (auto v = get(std::string("system.") + key)) {
      dst = static_cast<int>(parse_int(std::string("system.") + key, *v));
    }
  };
  auto dbl_key = [&](const std::string& path, double& dst) {
    if (auto v = get(path)) dst = parse_double(path, *v);
  };
  int_key("K", sys.K);
  int_key("N", sys.N);
  int_key("T1", sys.T1);
  int_key("T2", sys.T2);
  dbl_key("system.noise_var", sys.noise_var);
  dbl_key("system.channel_var", sys.channel_var);
  dbl_key("system.pilot_power", sys.pilot_power);
  dbl_key("system.data_power", sys.data_power);
  if (auto v = get("system.data_constellation")) {
    sys.data_constellation = parse_constellation("system.data_constellation", unquote(*v));
  }

  const bool unquantized =
      get("quantizer.unquantized") && parse_bool("quantizer.unquantized", *get("quantizer.unquantized"));
  if (unquantized && get("quantizer.bits")) {
    throw ConfigError("quantizer.unquantized", "conflicts with quantizer.bits");
  }
  if (auto v = get("quantizer.bits")) {
    const auto bits = split_list(*v);
    if (bits.empty()) throw ConfigError("quantizer.bits", "must list at least one entry");
    std::vector<double> steps;
    if (auto s = get("quantizer.step")) {
      for (const auto& item : split_list(*s)) steps.push_back(parse_double("quantizer.step", item));
    }
    const bool any_finite = std::any_of(bits.begin(), bits.end(),
                                        [](const std::string& b) { return b != "inf"; });
    if (any_finite && steps.empty()) throw ConfigError("quantizer.step", "required for finite bits");
    if (steps.size() > 1 && steps.size() != bits.size()) {
      throw ConfigError("quantizer.step", "give one step or one per bits entry");
    }
    spec.quantizers.clear();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == "inf") {
        spec.quantizers.push_back(make_unquantized());
        continue;
      }
      const auto b = parse_int("quantizer.bits", bits[i]);
      const double step = steps.size() == 1 ? steps[0] : steps[i];
      if (b < 1 || b > 12) throw ConfigError("quantizer.bits", "must lie in 1..12 or be inf");
      if (!(step > 0.0)) throw ConfigError("quantizer.step", "must be positive");
      spec.quantizers.push_back(make_quantizer(static_cast<int>(b), step));
    }
  } else if (get("quantizer.step")) {
    throw ConfigError("quantizer.step", "given without quantizer.bits");
  }

  if (auto v = get("sweep.variable")) {
    const auto s = unquote(*v);
    if (s == "snr_db") {
      spec.sweep.variable = SweepVariable::snr_db;
    } else if (s == "alpha") {
      spec.sweep.variable = SweepVariable::alpha;
    } else {
      throw ConfigError("sweep.variable", "must be snr_db or alpha, got '" + s + "'");
    }
  }
  if (auto v = get("sweep.grid")) spec.sweep.grid = parse_grid("sweep.grid", *v);

  if (auto v = get("gamp.max_iter")) {
    spec.gamp.max_iter = static_cast<int>(parse_int("gamp.max_iter", *v));
  }
  dbl_key("gamp.tol", spec.gamp.tol);
  dbl_key("gamp.damping", spec.gamp.damping);
  dbl_key("gamp.variance_floor", spec.gamp.variance_floor);
  dbl_key("gamp.variance_ceiling", spec.gamp.variance_ceiling);

  if (auto v = get("replica.modes")) {
    spec.replica_modes.clear();
    for (const auto& s : split_list(*v)) spec.replica_modes.push_back(parse_mode("replica.modes", s));
  }
  if (auto v = get("replica.rate_discount")) {
    spec.rate_discount = parse_bool("replica.rate_discount", *v);
  }

  spec.validate();
  return spec;
}

ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string to_config_text(const ExperimentSpec& s) {
  std::string out;
  out += "[experiment]\n";
  out += fmt::format("name = {}\n", s.name);
  out += fmt::format("estimators = {}\n",
                     join(s.estimators, [](Estimator e) { return to_string(e); }));
  out += fmt::format("trials = {}\n", s.trials);
  out += fmt::format("master_seed = {}\n", s.master_seed);
  out += fmt::format("replica = {}\n", s.replica);

  const auto& y = s.system;
  out += "\n[system]\n";
  out += fmt::format("K = {}\nN = {}\nT1 = {}\nT2 = {}\n", y.K, y.N, y.T1, y.T2);
  out += fmt::format("noise_var = {}\n", fmt_double(y.noise_var));
  out += fmt::format("channel_var = {}\n", fmt_double(y.channel_var));
  out += fmt::format("pilot_power = {}\n", fmt_double(y.pilot_power));
  out += fmt::format("data_power = {}\n", fmt_double(y.data_power));
  out += fmt::format("data_constellation = {}\n", to_string(y.data_constellation));

  out += "\n[quantizer]\n";
  out += fmt::format("bits = {}\n", join(s.quantizers, [](const QuantizerSpec& q) {
                       return q.quantized() ? std::to_string(q.bits) : std::string("inf");
                     }));
  std::vector<double> steps;
  for (const auto& q : s.quantizers) steps.push_back(q.quantized() ? q.step : 1.0);
  const bool uniform_step =
      std::all_of(steps.begin(), steps.end(), [&](double v) { return v == steps.front(); });
  out += fmt::format("step = {}\n", uniform_step ? fmt_double(steps.front())
                                                 : join(steps, fmt_double));

  out += "\n[sweep]\n";
  out += fmt::format("variable = {}\n", to_string(s.sweep.variable));
  out += fmt::format("grid = {}\n", join(s.sweep.grid, fmt_double));

  out += "\n[gamp]\n";
  out += fmt::format("max_iter = {}\n", s.gamp.max_iter);
  out += fmt::format("tol = {}\n", fmt_double(s.gamp.tol));
  out += fmt::format("damping = {}\n", fmt_double(s.gamp.damping));
  out += fmt::format("variance_floor = {}\n", fmt_double(s.gamp.variance_floor));
  out += fmt::format("variance_ceiling = {}\n", fmt_double(s.gamp.variance_ceiling));

  out += "\n[replica]\n";
  out += fmt::format("modes = {}\n",
                     join(s.replica_modes, [](ReplicaMode m) { return to_string(m); }));
  out += fmt::format("rate_discount = {}\n", s.rate_discount);
  return out;
}

std::string config_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_config_text(spec)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

ExperimentSpec preset(std::string_view name) {
  ExperimentSpec s;
  s.system = SystemConfig{};  // K=50, N=200, T1=50, T2=450
  s.master_seed = 1;
  if (name == "fig2") {
    s.name = "fig2";
    s.estimators = {Estimator::jcd, Estimator::known_csi};
    s.quantizers = {make_quantizer(1, 0.5), make_quantizer(2, 0.5), make_quantizer(3, 0.5),
                    make_unquantized()};
    s.sweep = {SweepVariable::snr_db, {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20}};
    s.trials = 10000;
    s.replica = true;
    s.replica_modes = {ReplicaMode::jcd, ReplicaMode::perfect_csi};
  } else if (name == "fig3") {
    s.name = "fig3";
    s.estimators = {Estimator::jcd, Estimator::pilot_only};
    s.quantizers = {make_quantizer(1, 0.5), make_quantizer(2, 0.5), make_quantizer(3, 0.5)};
    s.sweep.variable = SweepVariable::snr_db;
    s.sweep.grid.clear();
    for (int db = 0; db <= 20; ++db) s.sweep.grid.push_back(db);
    s.trials = 10000;
    s.replica = true;
    s.replica_modes = {ReplicaMode::jcd};
  } else if (name == "fig4") {
    s.name = "fig4";
    s.estimators = {};
    s.system.noise_var = 0.1;
    s.system.data_constellation = Constellation::circular_gaussian;
    s.quantizers = {make_quantizer(1, 0.5), make_quantizer(2, 0.5), make_quantizer(3, 0.5),
                    make_unquantized()};
    s.sweep.variable = SweepVariable::alpha;
    s.sweep.grid.clear();
    for (int a = 1; a <= 80; ++a) s.sweep.grid.push_back(a);
    s.trials = 1;
    s.replica = true;
    s.replica_modes = {ReplicaMode::jcd};
  } else {
    throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (fig2, fig3, fig4)");
  }
  s.validate();
  return s;
}

}  // namespace qmimo
