#pragma once

#include "qmimo/model.hpp"
#include "qmimo/priors.hpp"
#include "qmimo/quantizer.hpp"

#include <string>
#include <vector>

namespace qmimo {

enum class ReplicaMode { jcd, perfect_csi };

std::string to_string(ReplicaMode mode);

/// Large-system parameters: alpha = N/K, beta_t = T_t/K, prior powers c_*.
struct ReplicaConfig {
  double alpha = 4.0;
  double beta1 = 1.0;
  double beta2 = 9.0;
  double c_h = 1.0;
  double c_x1 = 1.0;
  double c_x2 = 1.0;
  double noise_var = 0.1;
  Constellation data_prior = Constellation::qpsk;
  QuantizerSpec quantizer = make_unquantized();
  ReplicaMode mode = ReplicaMode::jcd;

  PriorSpec x2_prior() const;
  PriorSpec h_prior() const { return PriorSpec::channel_gaussian(c_h); }
  void validate() const;

  static ReplicaConfig from_system(const SystemConfig& system, ReplicaMode mode);
};

struct ReplicaOptions {
  double damping = 0.5;
  int max_iter = 10000;
  double tol = 1e-10;            // max |delta q| / c
  double distinct_tol = 1e-6;    // candidates closer than this are merged
};

struct ReplicaCandidate {
  double init_q_h = 0.0;
  double init_q_x2 = 0.0;
  double q_h = 0.0;
  double q_x2 = 0.0;
  double free_entropy = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct ReplicaSolution {
  double q_h = 0.0;
  double q_x2 = 0.0;
  double qt_h = 0.0;  // +inf in perfect-csi mode
  double qt_x2 = 0.0;
  double mse_h = 0.0;
  double mse_x2 = 0.0;
  double chi1 = 0.0;
  double chi2 = 0.0;
  double free_entropy = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<ReplicaCandidate> candidates;  // one per initialization
};

/// chi = sum_b E_v[(Psi_b'(V))^2 / Psi_b(V)], V = sqrt(q_h q_x) v, with the
/// bin probabilities taken at variance noise_var + c_h c_x - q_h q_x. All
/// 2^B bins are summed. Unquantized: 1 / (noise_var + c_h c_x - q_h q_x).
/// Throws std::invalid_argument when q_h q_x > c_h c_x.
double chi(double q_h, double q_x, double c_h, double c_x, double noise_var,
           const QuantizerSpec& spec);

/// Output part of the free entropy for one complex entry:
/// 2 sum_b E_v[Psi_b log Psi_b] (quantized) or -log(pi e s) (unquantized),
/// as a function of m = q_h q_x. Its derivative in m is chi.
double output_free_entropy(double m, double cc, double noise_var, const QuantizerSpec& spec);

/// MMSE of x ~ prior in y = sqrt(qt) x + w, w ~ CN(0, 1).
double scalar_mmse(double qt, const PriorSpec& prior);

/// Mutual information (nats) of the same scalar channel.
double scalar_mutual_information(double qt, const PriorSpec& prior);

/// qt such that scalar_mmse(qt) == target; +inf for target <= 0.
double invert_scalar_mmse(double target, const PriorSpec& prior);

/// Damped fixed-point iteration from three initializations; coexisting
/// solutions are ranked by free entropy.
ReplicaSolution solve_fixed_point(const ReplicaConfig& cfg, const ReplicaOptions& opts = {});

/// Known-channel effective SINR qt = alpha c_h chi evaluated at
/// mse_h = 0, written directly in terms of the data MSE.
double perfect_csi_sinr(double q_x, const ReplicaConfig& cfg);

/// Scalar iteration on perfect_csi_sinr; independent of solve_fixed_point.
ReplicaSolution solve_perfect_csi(const ReplicaConfig& cfg, const ReplicaOptions& opts = {});

/// Q(sqrt(qt)).
double predict_ber_qpsk(double qt);

/// Separate-decoding rate in bits per channel use, discounted by the data
/// fraction beta2 / (beta1 + beta2). Pass beta1 = 0 for no discount.
double achievable_rate(double qt, const PriorSpec& prior, double beta1, double beta2);

struct Overlaps {
  double q_h = 0.0;
  double q_x2 = 0.0;
};

/// Free entropy as a function of the overlaps alone, with the conjugate
/// parameters set by the scalar-channel stationarity conditions. Its
/// stationary points are the fixed points; -inf on the q = c boundary.
double free_entropy(Overlaps overlaps, const ReplicaConfig& cfg);

/// Free entropy evaluated at explicit (q, qt); equals free_entropy() at a
/// fixed point.
double free_entropy_rs(double q_h, double q_x2, double qt_h, double qt_x2,
                       const ReplicaConfig& cfg);

struct FixedPointResiduals {
  double qt_h = 0.0;
  double qt_x2 = 0.0;
  double q_h = 0.0;
  double q_x2 = 0.0;
  double max() const;
};

/// Relative residuals of the four fixed-point equations at `sol`.
FixedPointResiduals fixed_point_residuals(const ReplicaSolution& sol, const ReplicaConfig& cfg);

}  // namespace qmimo
