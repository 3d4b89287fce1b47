#include "qmimo/estimators.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qmimo {

namespace {

using Eigen::Index;
using cd = std::complex<double>;

struct DimMoments {
  double mean = 0.0;
  double var = 0.0;
};

// One real dimension of the quantized output channel: Z ~ N(p, zv),
// Y = Z + W with W ~ N(0, wv), Y observed in (lo, hi].
DimMoments output_dimension(double lo, double hi, double p, double zv, double wv) {
  const double yv = zv + wv;
  double y_mean = 0.0;
  double y_var = 0.0;
  if (const auto tm = truncated_gauss_moments(lo, hi, p, yv)) {
    y_mean = tm->mean;
    y_var = tm->var;
  } else {
    y_mean = p <= lo ? lo : hi;
  }
  const double gain = zv / yv;
  return {p + gain * (y_mean - p), zv * (1.0 - gain) + gain * gain * y_var};
}

struct BilinearProblem {
  const Observation* observation = nullptr;
  const QuantizerSpec* quantizer = nullptr;
  double noise_var = 0.0;
  Index K = 0;
  const CMatrix* pilots = nullptr;         // K x T1, may be empty
  const CMatrix* known_channel = nullptr;  // nullptr: estimate H jointly
  PriorSpec data_prior;
  PriorSpec channel_prior;
  GampOptions opts;
  const GampObserver* observer = nullptr;
};

struct EngineResult {
  GampState state;
  std::vector<IterationRecord> records;
  bool converged = false;
  int iterations = 0;
};

EngineResult run_bilinear_gamp(const BilinearProblem& pb) {
  const Observation& obs = *pb.observation;
  const GampOptions& o = pb.opts;
  const Index N = obs.rows();
  const Index T = obs.cols();
  const Index K = pb.K;
  const Index T1 = pb.pilots ? pb.pilots->cols() : 0;
  const bool learn = pb.known_channel == nullptr;
  const double s2 = 1.0 / static_cast<double>(K);
  const double s = std::sqrt(s2);
  const double d = 1.0 - o.damping;  // weight on the new value
  const double floor = o.variance_floor;
  const double x_ceiling = o.variance_ceiling * pb.data_prior.power;
  const double h_prior = pb.channel_prior.power;
  const double h_ceiling = o.variance_ceiling * h_prior;
  const bool quantized = pb.quantizer->quantized();
  // Noise enters the output denoiser only; a zero-noise unquantized model is
  // handled by the floor.
  const double noise = std::max(pb.noise_var, floor);

  EngineResult out;
  GampState& st = out.state;
  st.xhat = CMatrix::Zero(K, T);
  st.xvar = RMatrix::Constant(K, T, pb.data_prior.power);
  if (T1 > 0) {
    st.xhat.leftCols(T1) = *pb.pilots;
    st.xvar.leftCols(T1).setConstant(floor);
  }
  if (learn) {
    st.hhat = CMatrix::Zero(N, K);
    st.hvar = RMatrix::Constant(N, K, h_prior);
  } else {
    st.hhat = *pb.known_channel;
    st.hvar = RMatrix::Zero(N, K);
  }
  st.phat = CMatrix::Zero(N, T);
  st.pvar = RMatrix::Zero(N, T);
  st.shat = CMatrix::Zero(N, T);
  st.svar = RMatrix::Zero(N, T);

  RMatrix pvar_bar_prev;
  RMatrix pvar_prev;
  CMatrix xbar;
  CMatrix abar;
  CMatrix shat_new(N, T);
  RMatrix svar_new(N, T);
  const Index data_entries = K * (T - T1);

  for (int it = 0; it < o.max_iter; ++it) {
    const CMatrix A = s * st.hhat;
    const RMatrix Av = s2 * st.hvar;

    // Plug-in output moments with the Onsager correction.
    RMatrix pvar_bar = A.cwiseAbs2() * st.xvar;
    if (learn) pvar_bar.noalias() += Av * st.xhat.cwiseAbs2();
    RMatrix pvar = pvar_bar;
    if (learn) pvar.noalias() += Av * st.xvar;
    if (it > 0) {
      pvar_bar = d * pvar_bar + (1.0 - d) * pvar_bar_prev;
      pvar = d * pvar + (1.0 - d) * pvar_prev;
    }
    pvar = pvar.cwiseMax(floor);
    pvar_bar_prev = pvar_bar;
    pvar_prev = pvar;
    st.phat = A * st.xhat;
    st.phat.array() -= st.shat.array() * pvar_bar.array();
    st.pvar = pvar;

    // Output denoising and scaled residuals.
    for (Index j = 0; j < T; ++j) {
      for (Index i = 0; i < N; ++i) {
        const cd p = st.phat(i, j);
        const double pv = pvar(i, j);
        const ScalarEstimate z =
            quantized ? denoise_output_quantized(obs.bins(i, j), p, pv, noise, *pb.quantizer)
                      : denoise_output_unquantized(obs.values(i, j), p, pv, noise);
        const double zvar = std::min(z.var, pv);
        shat_new(i, j) = (z.mean - p) / pv;
        svar_new(i, j) = std::max((1.0 - zvar / pv) / pv, floor);
      }
    }
    if (it > 0) {
      st.shat = d * shat_new + (1.0 - d) * st.shat;
      st.svar = d * svar_new + (1.0 - d) * st.svar;
    } else {
      st.shat = shat_new;
      st.svar = svar_new;
    }

    if (it == 0) {
      xbar = st.xhat;
      abar = A;
    } else {
      xbar = d * st.xhat + (1.0 - d) * xbar;
      abar = d * A + (1.0 - d) * abar;
    }

    // Pseudo-data for X.
    const RMatrix rvar =
        (abar.cwiseAbs2().transpose() * st.svar).cwiseInverse().cwiseMin(x_ceiling);
    CMatrix rhat = rvar.cast<cd>().cwiseProduct(abar.adjoint() * st.shat);
    if (learn) {
      const RMatrix onsager = Av.transpose() * st.svar;
      rhat.array() += xbar.array() * (1.0 - rvar.array() * onsager.array()).max(0.0);
    } else {
      rhat += xbar;
    }

    // Pseudo-data for H (scaled by 1/sqrt K), from the same residuals.
    CMatrix qhat;
    RMatrix qvar;
    if (learn) {
      qvar = (st.svar * xbar.cwiseAbs2().transpose()).cwiseInverse().cwiseMin(h_ceiling * s2);
      const RMatrix onsager = st.svar * st.xvar.transpose();
      qhat = qvar.cast<cd>().cwiseProduct(st.shat * xbar.adjoint());
      qhat.array() += abar.array() * (1.0 - qvar.array() * onsager.array()).max(0.0);
    }

    // Input denoising; pilot columns stay pinned.
    double residual = 0.0;
    for (Index t = T1; t < T; ++t) {
      for (Index k = 0; k < K; ++k) {
        const ScalarEstimate x = denoise_input(rhat(k, t), std::max(rvar(k, t), floor),
                                               pb.data_prior);
        residual += std::norm(x.mean - st.xhat(k, t));
        st.xhat(k, t) = x.mean;
        st.xvar(k, t) = std::clamp(x.var, floor, x_ceiling);
      }
    }
    residual = data_entries > 0 ? residual / static_cast<double>(data_entries) : 0.0;

    if (learn) {
      // The channel must settle too: once the data are decided the channel
      // keeps refining from all T columns.
      const PriorSpec scaled_prior = PriorSpec::channel_gaussian(h_prior * s2);
      double h_change = 0.0;
      for (Index k = 0; k < K; ++k) {
        for (Index i = 0; i < N; ++i) {
          const ScalarEstimate a =
              denoise_input(qhat(i, k), std::max(qvar(i, k), floor * s2), scaled_prior);
          h_change += std::norm(a.mean / s - st.hhat(i, k));
          st.hhat(i, k) = a.mean / s;
          st.hvar(i, k) = std::clamp(a.var / s2, floor, h_ceiling);
        }
      }
      residual = std::max(residual, h_change / static_cast<double>(N * K) / h_prior);
    }

    st.iteration = it + 1;
    st.residual_metric = residual;
    IterationRecord rec;
    rec.residual = residual;
    if (data_entries > 0) rec.mean_xvar = st.xvar.rightCols(T - T1).mean();
    rec.mean_hvar = learn ? st.hvar.mean() : 0.0;
    out.records.push_back(rec);
    out.iterations = it + 1;
    if (pb.observer && *pb.observer) (*pb.observer)(st);
    // The data estimates cannot move before the channel estimate leaves its
    // all-zero start, so the first residual says nothing about convergence.
    if (residual < o.tol && (it > 0 || !learn)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

void check_options(const GampOptions& o) {
  if (o.max_iter < 0) throw std::invalid_argument("gamp.max_iter must be >= 0");
  if (!(o.tol >= 0.0)) throw std::invalid_argument("gamp.tol must be >= 0");
  if (!(o.damping >= 0.0 && o.damping < 1.0)) {
    throw std::invalid_argument("gamp.damping must be in [0, 1)");
  }
  if (!(o.variance_floor > 0.0)) throw std::invalid_argument("gamp.variance_floor must be > 0");
}

CMatrix hard_decisions(const CMatrix& soft, const PriorSpec& prior) {
  return soft.unaryExpr([&](const cd& x) { return hard_decision(x, prior); });
}

}  // namespace

ScalarEstimate denoise_output_quantized(BinIndexPair bins, std::complex<double> phat,
                                        double pvar, double noise_var,
                                        const QuantizerSpec& spec) {
  if (!(pvar > 0.0)) throw std::invalid_argument("denoise_output_quantized: pvar must be > 0");
  if (!spec.quantized()) {
    throw std::invalid_argument("denoise_output_quantized: quantizer is unquantized");
  }
  const double zv = 0.5 * pvar;
  const double wv = 0.5 * std::max(noise_var, 0.0);
  const DimMoments re =
      output_dimension(spec.lower(bins.re_bin), spec.upper(bins.re_bin), phat.real(), zv, wv);
  const DimMoments im =
      output_dimension(spec.lower(bins.im_bin), spec.upper(bins.im_bin), phat.imag(), zv, wv);
  return {{re.mean, im.mean}, std::min(re.var + im.var, pvar)};
}

ScalarEstimate denoise_output_unquantized(std::complex<double> y, std::complex<double> phat,
                                          double pvar, double noise_var) {
  if (!(pvar > 0.0)) {
    throw std::invalid_argument("denoise_output_unquantized: pvar must be > 0");
  }
  const double gain = pvar / (pvar + noise_var);
  return {phat + gain * (y - phat), gain * noise_var};
}

JcdResult jcd_estimate(const Observation& observation, const CMatrix& pilots,
                       const SystemConfig& config, const GampOptions& opts,
                       const GampObserver& observer) {
  config.validate();
  check_options(opts);
  if (observation.rows() != config.N || observation.cols() != config.T()) {
    throw std::invalid_argument("jcd_estimate: observation must be N x (T1 + T2)");
  }
  if (pilots.rows() != config.K || pilots.cols() != config.T1) {
    throw std::invalid_argument("jcd_estimate: pilots must be K x T1");
  }
  BilinearProblem pb;
  pb.observation = &observation;
  pb.quantizer = &config.quantizer;
  pb.noise_var = config.noise_var;
  pb.K = config.K;
  pb.pilots = &pilots;
  pb.data_prior = config.data_prior();
  pb.channel_prior = config.channel_prior();
  pb.opts = opts;
  pb.observer = &observer;
  EngineResult run = run_bilinear_gamp(pb);

  JcdResult result;
  result.hhat = std::move(run.state.hhat);
  result.x2hat_soft = run.state.xhat.rightCols(config.T2);
  result.x2var = run.state.xvar.rightCols(config.T2);
  result.x2hat_hard = hard_decisions(result.x2hat_soft, pb.data_prior);
  result.per_iteration = std::move(run.records);
  result.converged = run.converged;
  result.iterations_used = run.iterations;
  return result;
}

DetectionResult detect_known_channel(const Observation& data_observation, const CMatrix& H,
                                     const SystemConfig& config, const GampOptions& opts,
                                     const GampObserver& observer) {
  config.validate();
  check_options(opts);
  if (H.rows() != config.N || H.cols() != config.K) {
    throw std::invalid_argument("detect_known_channel: H must be N x K");
  }
  if (data_observation.rows() != config.N) {
    throw std::invalid_argument("detect_known_channel: observation must have N rows");
  }
  BilinearProblem pb;
  pb.observation = &data_observation;
  pb.quantizer = &config.quantizer;
  pb.noise_var = config.noise_var;
  pb.K = config.K;
  pb.known_channel = &H;
  pb.data_prior = config.data_prior();
  pb.channel_prior = config.channel_prior();
  pb.opts = opts;
  pb.observer = &observer;
  EngineResult run = run_bilinear_gamp(pb);

  DetectionResult result;
  result.xhat_soft = std::move(run.state.xhat);
  result.xvar = std::move(run.state.xvar);
  result.xhat_hard = hard_decisions(result.xhat_soft, pb.data_prior);
  result.per_iteration = std::move(run.records);
  result.converged = run.converged;
  result.iterations_used = run.iterations;
  return result;
}

CMatrix ls_channel_estimate(const CMatrix& representatives, const CMatrix& pilots) {
  const Index K = pilots.rows();
  if (representatives.cols() != pilots.cols()) {
    throw std::invalid_argument("ls_channel_estimate: column count mismatch");
  }
  if (pilots.cols() < K) {
    throw std::domain_error("ls_channel_estimate: need T1 >= K pilot symbols");
  }
  const CMatrix gram = pilots * pilots.adjoint();
  const Eigen::ColPivHouseholderQR<CMatrix> qr(gram);
  if (qr.rank() < K) throw std::domain_error("ls_channel_estimate: X1 X1^H is rank deficient");
  // gram is Hermitian: hhat gram = sqrt(K) R X1^H  <=>  gram hhat^H = sqrt(K) X1 R^H.
  const CMatrix rhs = std::sqrt(static_cast<double>(K)) * (pilots * representatives.adjoint());
  return qr.solve(rhs).adjoint();
}

PilotOnlyResult pilot_only_pipeline(const Observation& observation, const CMatrix& pilots,
                                    const SystemConfig& config, const GampOptions& opts) {
  config.validate();
  if (observation.cols() != config.T()) {
    throw std::invalid_argument("pilot_only_pipeline: observation must be N x (T1 + T2)");
  }
  PilotOnlyResult result;
  const CMatrix R1 = observation.values.leftCols(config.T1);
  try {
    result.hhat = ls_channel_estimate(R1, pilots);
  } catch (const std::domain_error&) {
    // Random pilots can be singular for small K; use the minimum-norm fit.
    const Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(pilots.adjoint());
    result.hhat = std::sqrt(static_cast<double>(config.K)) * cod.solve(R1.adjoint()).adjoint();
  }
  result.detection = detect_known_channel(observation.columns(config.T1, config.T2),
                                          result.hhat, config, opts);
  return result;
}

}  // namespace qmimo
