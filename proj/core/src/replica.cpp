#include "qmimo/replica.hpp"

#include "qmimo/numerics.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qmimo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kMinMass = 1e-300;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Q(|z|) with Q(inf) = 0.
double tail(double z) { return std::isfinite(z) ? q_function(std::abs(z)) : 0.0; }

double interval_mass(double zl, double zh, double tl, double th) {
  if (zl > 0.0) return tl - th;
  if (zh <= 0.0) return th - tl;
  return 1.0 - th - tl;
}

// Walks the bins of the scaled output sqrt2*Re(Y) at mean V and variance s,
// handing (Psi_b, dPsi_b/dV) to `visit`.
template <class Visit>
void for_each_bin(const QuantizerSpec& spec, double V, double s, Visit&& visit) {
  const double inv_sd = 1.0 / std::sqrt(s);
  double zl = -kInf;
  double tl = 0.0;
  double pl = 0.0;
  const int bins = spec.num_bins();
  for (int b = 1; b <= bins; ++b) {
    const double r = spec.upper(b);
    const double zh = std::isfinite(r) ? (kSqrt2 * r - V) * inv_sd : kInf;
    const double th = tail(zh);
    const double ph = std_normal_pdf(zh);
    const double psi = interval_mass(zl, zh, tl, th);
    visit(psi, (pl - ph) * inv_sd);
    zl = zh;
    tl = th;
    pl = ph;
  }
}

double effective_variance(double m, double cc, double noise_var) {
  return noise_var + std::max(cc - m, 0.0);
}

// E[2 / (1 + exp(2(q + sqrt(q) z)))] = 1 - E[tanh(q + sqrt(q) z)], unit-power BPSK.
double bpsk_mmse(double q) {
  if (q <= 0.0) return 1.0;
  if (!std::isfinite(q)) return 0.0;
  const double sq = std::sqrt(q);
  return expect_standard_normal([&](double z) {
    const double u = 2.0 * (q + sq * z);
    return u > 0.0 ? 2.0 * std::exp(-u) / (1.0 + std::exp(-u)) : 2.0 / (1.0 + std::exp(u));
  });
}

// q - E[log cosh(q + sqrt(q) z)], nats, unit-power BPSK.
double bpsk_information(double q) {
  if (q <= 0.0) return 0.0;
  if (!std::isfinite(q)) return std::numbers::ln2;
  // ln2 - E log(1 + e^{-2u}), u = q + sqrt(q) z; avoids the q - E log cosh
  // cancellation at high SNR.
  const double sq = std::sqrt(q);
  const double loss = expect_standard_normal([&](double z) {
    const double u = q + sq * z;
    return u >= 0.0 ? std::log1p(std::exp(-2.0 * u)) : -2.0 * u + std::log1p(std::exp(2.0 * u));
  });
  return std::clamp(std::numbers::ln2 - loss, 0.0, std::numbers::ln2);
}

// Scalar-channel part of the free entropy with qt at its stationary value:
// (c - q) qt - I(qt) where mmse(qt) = c - q.
double prior_potential(double q, const PriorSpec& prior) {
  const double c = prior.power;
  if (q <= 0.0) return 0.0;
  if (q >= c) return -kInf;
  const double qt = invert_scalar_mmse(c - q, prior);
  return (c - q) * qt - scalar_mutual_information(qt, prior);
}

struct Trajectory {
  double q_h = 0.0;
  double q_x2 = 0.0;
  bool converged = false;
  int iterations = 0;
};

template <class Step>
Trajectory iterate(double q_h, double q_x2, double c_h, double c_x2, const ReplicaOptions& opts,
                   Step&& step) {
  Trajectory tr;
  for (int it = 0; it < opts.max_iter; ++it) {
    const auto [nh, nx] = step(q_h, q_x2);
    const double delta = std::max(std::abs(nh - q_h) / c_h, std::abs(nx - q_x2) / c_x2);
    q_h = (1.0 - opts.damping) * q_h + opts.damping * nh;
    q_x2 = (1.0 - opts.damping) * q_x2 + opts.damping * nx;
    tr.iterations = it + 1;
    if (delta < opts.tol) {
      tr.converged = true;
      break;
    }
  }
  tr.q_h = q_h;
  tr.q_x2 = q_x2;
  return tr;
}

double chi_pilot(double q_h, const ReplicaConfig& cfg) {
  return cfg.beta1 > 0.0 ? chi(q_h, cfg.c_x1, cfg.c_h, cfg.c_x1, cfg.noise_var, cfg.quantizer)
                         : 0.0;
}

ReplicaSolution finalize_general(double q_h, double q_x2, const ReplicaConfig& cfg) {
  ReplicaSolution sol;
  sol.q_h = q_h;
  sol.q_x2 = q_x2;
  sol.chi2 = chi(q_h, q_x2, cfg.c_h, cfg.c_x2, cfg.noise_var, cfg.quantizer);
  sol.qt_x2 = cfg.alpha * q_h * sol.chi2;
  if (cfg.mode == ReplicaMode::jcd) {
    sol.chi1 = chi_pilot(q_h, cfg);
    sol.qt_h = cfg.beta1 * cfg.c_x1 * sol.chi1 + cfg.beta2 * q_x2 * sol.chi2;
    sol.mse_h = cfg.c_h - q_h;
  } else {
    sol.qt_h = kInf;
    sol.mse_h = 0.0;
  }
  sol.mse_x2 = cfg.c_x2 - q_x2;
  sol.free_entropy = free_entropy_rs(q_h, q_x2, sol.qt_h, sol.qt_x2, cfg);
  return sol;
}

template <class Step, class Finalize>
ReplicaSolution multi_start(const ReplicaConfig& cfg, const ReplicaOptions& opts, Step&& step,
                            Finalize&& finalize) {
  const bool pinned = cfg.mode == ReplicaMode::perfect_csi;
  const double near_one = 1.0 - 1e-6;
  const double starts[3][2] = {
      {pinned ? cfg.c_h : 0.0, 0.0},
      {pinned ? cfg.c_h : near_one * cfg.c_h, near_one * cfg.c_x2},
      {pinned ? cfg.c_h : 0.5 * cfg.c_h, 0.5 * cfg.c_x2},
  };
  std::vector<ReplicaCandidate> candidates;
  std::vector<ReplicaSolution> solutions;
  for (const auto& s : starts) {
    const Trajectory tr = iterate(s[0], s[1], cfg.c_h, cfg.c_x2, opts, step);
    ReplicaSolution sol = finalize(tr.q_h, tr.q_x2);
    sol.converged = tr.converged;
    sol.iterations = tr.iterations;
    candidates.push_back(
        {s[0], s[1], sol.q_h, sol.q_x2, sol.free_entropy, tr.converged, tr.iterations});
    solutions.push_back(std::move(sol));
  }
  // Prefer converged candidates; among them the largest free entropy. Ties
  // between copies of the same fixed point keep the earliest start.
  std::size_t best = 0;
  for (std::size_t i = 1; i < solutions.size(); ++i) {
    const auto& a = solutions[i];
    const auto& b = solutions[best];
    if (a.converged != b.converged) {
      if (a.converged) best = i;
      continue;
    }
    const bool same = std::abs(a.q_h - b.q_h) <= opts.distinct_tol * cfg.c_h &&
                      std::abs(a.q_x2 - b.q_x2) <= opts.distinct_tol * cfg.c_x2;
    if (!same && a.free_entropy > b.free_entropy) best = i;
  }
  ReplicaSolution out = std::move(solutions[best]);
  out.candidates = std::move(candidates);
  return out;
}

}  // namespace

std::string to_string(ReplicaMode mode) {
  return mode == ReplicaMode::jcd ? "jcd" : "perfect-csi";
}

PriorSpec ReplicaConfig::x2_prior() const {
  return data_prior == Constellation::qpsk ? PriorSpec::qpsk(c_x2)
                                           : PriorSpec::circular_gaussian(c_x2);
}

void ReplicaConfig::validate() const {
  require(alpha > 0.0, "replica.alpha must be positive");
  require(beta1 >= 0.0, "replica.beta1 must be >= 0");
  require(beta2 > 0.0, "replica.beta2 must be positive");
  require(c_h > 0.0 && c_x1 > 0.0 && c_x2 > 0.0, "replica powers must be positive");
  require(noise_var > 0.0 && std::isfinite(noise_var), "replica.noise_var must be positive");
}

ReplicaConfig ReplicaConfig::from_system(const SystemConfig& system, ReplicaMode mode) {
  ReplicaConfig cfg;
  cfg.alpha = system.alpha();
  cfg.beta1 = mode == ReplicaMode::jcd ? system.beta1() : 0.0;
  cfg.beta2 = system.beta2();
  cfg.c_h = system.channel_var;
  cfg.c_x1 = system.pilot_power;
  cfg.c_x2 = system.data_power;
  cfg.noise_var = system.noise_var;
  cfg.data_prior = system.data_constellation;
  cfg.quantizer = system.quantizer;
  cfg.mode = mode;
  return cfg;
}

double chi(double q_h, double q_x, double c_h, double c_x, double noise_var,
           const QuantizerSpec& spec) {
  require(noise_var > 0.0, "chi: noise_var must be positive");
  const double cc = c_h * c_x;
  double m = q_h * q_x;
  if (m > cc * (1.0 + 1e-12)) throw std::invalid_argument("chi: q_h q_x exceeds c_h c_x");
  m = std::clamp(m, 0.0, cc);
  const double s = effective_variance(m, cc, noise_var);
  if (!spec.quantized()) return 1.0 / s;
  const double sm = std::sqrt(m);
  return expect_standard_normal([&](double v) {
    double acc = 0.0;
    for_each_bin(spec, sm * v, s, [&](double psi, double dpsi) {
      if (psi >= kMinMass) acc += dpsi * dpsi / psi;
    });
    return acc;
  });
}

double output_free_entropy(double m, double cc, double noise_var, const QuantizerSpec& spec) {
  m = std::clamp(m, 0.0, cc);
  const double s = effective_variance(m, cc, noise_var);
  if (!spec.quantized()) return -std::log(std::numbers::pi * std::numbers::e * s);
  const double sm = std::sqrt(m);
  const double per_dim = expect_standard_normal([&](double v) {
    double acc = 0.0;
    for_each_bin(spec, sm * v, s, [&](double psi, double) {
      if (psi >= kMinMass) acc += psi * std::log(psi);
    });
    return acc;
  });
  return 2.0 * per_dim;
}

double scalar_mmse(double qt, const PriorSpec& prior) {
  require(qt >= 0.0, "scalar_mmse: qt must be >= 0");
  const double c = prior.power;
  switch (prior.kind) {
    case PriorSpec::Kind::known:
      return 0.0;
    case PriorSpec::Kind::circular_gaussian:
    case PriorSpec::Kind::channel_gaussian:
      return std::isfinite(qt) ? c / (1.0 + c * qt) : 0.0;
    case PriorSpec::Kind::qpsk:
      return c * bpsk_mmse(c * qt);
  }
  throw std::logic_error("scalar_mmse: unknown prior");
}

double scalar_mutual_information(double qt, const PriorSpec& prior) {
  require(qt >= 0.0, "scalar_mutual_information: qt must be >= 0");
  const double c = prior.power;
  switch (prior.kind) {
    case PriorSpec::Kind::known:
      return 0.0;
    case PriorSpec::Kind::circular_gaussian:
    case PriorSpec::Kind::channel_gaussian:
      return std::isfinite(qt) ? std::log1p(c * qt) : kInf;
    case PriorSpec::Kind::qpsk:
      return 2.0 * bpsk_information(c * qt);
  }
  throw std::logic_error("scalar_mutual_information: unknown prior");
}

double invert_scalar_mmse(double target, const PriorSpec& prior) {
  const double c = prior.power;
  if (target >= c) return 0.0;
  if (target <= 0.0) return kInf;
  if (prior.gaussian()) return 1.0 / target - 1.0 / c;
  if (prior.kind != PriorSpec::Kind::qpsk) {
    throw std::invalid_argument("invert_scalar_mmse: unsupported prior");
  }
  auto f = [&](double qt) { return scalar_mmse(qt, prior) - target; };
  double lo = 0.0;
  double hi = 1.0 / c;
  double f_hi = f(hi);
  while (f_hi > 0.0) {
    lo = hi;
    hi *= 4.0;
    if (hi > 1e12) return hi;
    f_hi = f(hi);
  }
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, f(lo), f_hi, boost::math::tools::eps_tolerance<double>(50), max_iter);
  return 0.5 * (a + b);
}

ReplicaSolution solve_fixed_point(const ReplicaConfig& cfg, const ReplicaOptions& opts) {
  cfg.validate();
  const PriorSpec hp = cfg.h_prior();
  const PriorSpec xp = cfg.x2_prior();
  auto step = [&](double q_h, double q_x2) -> std::pair<double, double> {
    const double chi2 = chi(q_h, q_x2, cfg.c_h, cfg.c_x2, cfg.noise_var, cfg.quantizer);
    const double qt_x2 = cfg.alpha * q_h * chi2;
    double next_h = cfg.c_h;
    if (cfg.mode == ReplicaMode::jcd) {
      const double qt_h = cfg.beta1 * cfg.c_x1 * chi_pilot(q_h, cfg) + cfg.beta2 * q_x2 * chi2;
      next_h = cfg.c_h - scalar_mmse(qt_h, hp);
    }
    return {next_h, cfg.c_x2 - scalar_mmse(qt_x2, xp)};
  };
  return multi_start(cfg, opts, step,
                     [&](double q_h, double q_x2) { return finalize_general(q_h, q_x2, cfg); });
}

double perfect_csi_sinr(double q_x, const ReplicaConfig& cfg) {
  const double mse = std::max(cfg.c_x2 - q_x, 0.0);
  const double s = cfg.noise_var + cfg.c_h * mse;
  if (!cfg.quantizer.quantized()) return cfg.alpha * cfg.c_h / s;
  const double amp = std::sqrt(cfg.c_h * std::max(q_x, 0.0));
  const int bins = cfg.quantizer.num_bins();
  // bin_prob takes the per-dimension mean x = V / sqrt2; d/dV = (d/dx) / sqrt2.
  const double sum = expect_standard_normal([&](double v) {
    const double x = amp * v / kSqrt2;
    double acc = 0.0;
    for (int b = 1; b <= bins; ++b) {
      const double psi = bin_prob(cfg.quantizer, b, x, s);
      if (psi < kMinMass) continue;
      const double dpsi = bin_prob_deriv(cfg.quantizer, b, x, s) / kSqrt2;
      acc += dpsi * dpsi / psi;
    }
    return acc;
  });
  return cfg.alpha * cfg.c_h * sum;
}

ReplicaSolution solve_perfect_csi(const ReplicaConfig& base, const ReplicaOptions& opts) {
  ReplicaConfig cfg = base;
  cfg.mode = ReplicaMode::perfect_csi;
  cfg.beta1 = 0.0;
  cfg.validate();
  const PriorSpec xp = cfg.x2_prior();
  auto step = [&](double, double q_x) -> std::pair<double, double> {
    return {cfg.c_h, cfg.c_x2 - scalar_mmse(perfect_csi_sinr(q_x, cfg), xp)};
  };
  auto finalize = [&](double, double q_x) {
    ReplicaSolution sol;
    sol.q_h = cfg.c_h;
    sol.q_x2 = q_x;
    sol.qt_h = kInf;
    sol.qt_x2 = perfect_csi_sinr(q_x, cfg);
    sol.chi2 = sol.qt_x2 / (cfg.alpha * cfg.c_h);
    sol.mse_x2 = cfg.c_x2 - q_x;
    sol.free_entropy = free_entropy_rs(cfg.c_h, q_x, sol.qt_h, sol.qt_x2, cfg);
    return sol;
  };
  return multi_start(cfg, opts, step, finalize);
}

double predict_ber_qpsk(double qt) {
  require(qt >= 0.0, "predict_ber_qpsk: qt must be >= 0");
  if (!std::isfinite(qt)) return 0.0;
  return q_function(std::sqrt(qt));
}

double achievable_rate(double qt, const PriorSpec& prior, double beta1, double beta2) {
  require(beta1 >= 0.0 && beta2 > 0.0, "achievable_rate: need beta1 >= 0, beta2 > 0");
  const double bits = scalar_mutual_information(qt, prior) / std::numbers::ln2;
  return bits * beta2 / (beta1 + beta2);
}

double free_entropy_rs(double q_h, double q_x2, double qt_h, double qt_x2,
                       const ReplicaConfig& cfg) {
  const PriorSpec xp = cfg.x2_prior();
  const double out2 =
      output_free_entropy(q_h * q_x2, cfg.c_h * cfg.c_x2, cfg.noise_var, cfg.quantizer);
  double phi = cfg.alpha * cfg.beta2 * out2 - cfg.beta2 * scalar_mutual_information(qt_x2, xp) +
               cfg.beta2 * (cfg.c_x2 - q_x2) * qt_x2;
  if (cfg.mode == ReplicaMode::jcd) {
    if (cfg.beta1 > 0.0) {
      phi += cfg.alpha * cfg.beta1 *
             output_free_entropy(q_h * cfg.c_x1, cfg.c_h * cfg.c_x1, cfg.noise_var,
                                 cfg.quantizer);
    }
    phi += -cfg.alpha * scalar_mutual_information(qt_h, cfg.h_prior()) +
           cfg.alpha * (cfg.c_h - q_h) * qt_h;
  }
  return phi;
}

double free_entropy(Overlaps o, const ReplicaConfig& cfg) {
  const bool jcd = cfg.mode == ReplicaMode::jcd;
  const double q_h = jcd ? o.q_h : cfg.c_h;
  double phi = cfg.alpha * cfg.beta2 *
                   output_free_entropy(q_h * o.q_x2, cfg.c_h * cfg.c_x2, cfg.noise_var,
                                       cfg.quantizer) +
               cfg.beta2 * prior_potential(o.q_x2, cfg.x2_prior());
  if (jcd) {
    if (cfg.beta1 > 0.0) {
      phi += cfg.alpha * cfg.beta1 *
             output_free_entropy(q_h * cfg.c_x1, cfg.c_h * cfg.c_x1, cfg.noise_var,
                                 cfg.quantizer);
    }
    phi += cfg.alpha * prior_potential(q_h, cfg.h_prior());
  }
  return phi;
}

double FixedPointResiduals::max() const { return std::max({qt_h, qt_x2, q_h, q_x2}); }

FixedPointResiduals fixed_point_residuals(const ReplicaSolution& sol, const ReplicaConfig& cfg) {
  auto rel = [](double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
  };
  FixedPointResiduals r;
  const double chi2 = chi(sol.q_h, sol.q_x2, cfg.c_h, cfg.c_x2, cfg.noise_var, cfg.quantizer);
  r.qt_x2 = rel(sol.qt_x2, cfg.alpha * sol.q_h * chi2);
  r.q_x2 = std::abs(sol.q_x2 - (cfg.c_x2 - scalar_mmse(sol.qt_x2, cfg.x2_prior()))) / cfg.c_x2;
  if (cfg.mode == ReplicaMode::jcd) {
    r.qt_h = rel(sol.qt_h, cfg.beta1 * cfg.c_x1 * chi_pilot(sol.q_h, cfg) + cfg.beta2 * sol.q_x2 * chi2);
    r.q_h = std::abs(sol.q_h - (cfg.c_h - scalar_mmse(sol.qt_h, cfg.h_prior()))) / cfg.c_h;
  }
  return r;
}

}  // namespace qmimo
