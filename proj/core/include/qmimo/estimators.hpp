#pragma once

#include "qmimo/model.hpp"
#include "qmimo/priors.hpp"
#include "qmimo/quantizer.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace qmimo {

struct GampOptions {
  int max_iter = 50;
  double tol = 1e-6;       // mean-square change of xhat (data) and hhat (relative)
  double damping = 0.7;    // weight kept from the previous iterate; 0 is undamped
  double variance_floor = 1e-12;
  double variance_ceiling = 1e6;  // relative to the prior power
};

/// Message arrays of the bilinear iteration. The channel is carried
/// unscaled (hhat ~ H); the 1/sqrt(K) of the forward model is applied
/// inside the iteration.
struct GampState {
  CMatrix xhat;  // K x T
  RMatrix xvar;
  CMatrix hhat;  // N x K
  RMatrix hvar;
  CMatrix phat;  // N x T
  RMatrix pvar;
  CMatrix shat;  // N x T
  RMatrix svar;
  int iteration = 0;
  double residual_metric = 0.0;
};

using GampObserver = std::function<void(const GampState&)>;

struct IterationRecord {
  double mean_xvar = 0.0;  // data entries only
  double mean_hvar = 0.0;
  double residual = 0.0;
};

struct JcdResult {
  CMatrix hhat;        // N x K
  CMatrix x2hat_soft;  // K x T2
  CMatrix x2hat_hard;  // K x T2
  RMatrix x2var;
  std::vector<IterationRecord> per_iteration;
  bool converged = false;
  int iterations_used = 0;
};

struct DetectionResult {
  CMatrix xhat_soft;
  CMatrix xhat_hard;
  RMatrix xvar;
  std::vector<IterationRecord> per_iteration;
  bool converged = false;
  int iterations_used = 0;
};

struct PilotOnlyResult {
  CMatrix hhat;
  DetectionResult detection;
};

/// Posterior moments of Z ~ CN(phat, pvar) given that Z + W, W ~ CN(0,
/// noise_var), fell in the observed bins. Falls back to the nearest bin edge
/// when the bin mass underflows.
ScalarEstimate denoise_output_quantized(BinIndexPair bins, std::complex<double> phat,
                                        double pvar, double noise_var,
                                        const QuantizerSpec& spec);

/// Linear AWGN update for an unquantized observation y.
ScalarEstimate denoise_output_unquantized(std::complex<double> y, std::complex<double> phat,
                                          double pvar, double noise_var);

/// Joint channel-and-data estimation by bilinear GAMP over the whole block.
/// `observation` is N x (T1 + T2); the first T1 columns are pinned to `pilots`.
JcdResult jcd_estimate(const Observation& observation, const CMatrix& pilots,
                       const SystemConfig& config, const GampOptions& opts = {},
                       const GampObserver& observer = {});

/// GAMP data detection with the channel treated as known.
DetectionResult detect_known_channel(const Observation& data_observation, const CMatrix& H,
                                     const SystemConfig& config,
                                     const GampOptions& opts = {},
                                     const GampObserver& observer = {});

/// hhat = sqrt(K) R X1^H (X1 X1^H)^{-1}. Throws std::domain_error when
/// X1 X1^H is rank deficient.
CMatrix ls_channel_estimate(const CMatrix& representatives, const CMatrix& pilots);

/// LS on the pilot columns, then detect_known_channel on the data columns.
/// Singular pilots fall back to the minimum-norm least-squares channel.
PilotOnlyResult pilot_only_pipeline(const Observation& observation, const CMatrix& pilots,
                                    const SystemConfig& config,
                                    const GampOptions& opts = {});

}  // namespace qmimo
