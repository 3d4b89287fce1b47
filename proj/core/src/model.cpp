#include "qmimo/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qmimo {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument("system." + field + ": " + what);
}

CMatrix draw_symbols(CounterRng& rng, Eigen::Index rows, Eigen::Index cols,
                     Constellation constellation, double power) {
  CMatrix out(rows, cols);
  if (constellation == Constellation::qpsk) {
    const double amp = std::sqrt(0.5 * power);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        const auto bits = rng();
        out(i, j) = {(bits & 1u) ? -amp : amp, (bits & 2u) ? -amp : amp};
      }
    }
  } else {
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.complex_normal(power);
    }
  }
  return out;
}

}  // namespace

std::string to_string(Constellation c) {
  return c == Constellation::qpsk ? "qpsk" : "circular-gaussian";
}

PriorSpec SystemConfig::data_prior() const {
  return data_constellation == Constellation::qpsk ? PriorSpec::qpsk(data_power)
                                                   : PriorSpec::circular_gaussian(data_power);
}

void SystemConfig::validate() const {
  require(K > 0, "K", "must be a positive integer");
  require(N > 0, "N", "must be a positive integer");
  require(T1 >= 0, "T1", "must be nonnegative");
  require(T2 > 0, "T2", "must be a positive integer");
  require(noise_var >= 0.0 && std::isfinite(noise_var), "noise_var", "must be finite and >= 0");
  require(channel_var > 0.0, "channel_var", "must be positive");
  require(pilot_power > 0.0, "pilot_power", "must be positive");
  require(data_power > 0.0, "data_power", "must be positive");
  require(pilot_constellation == Constellation::qpsk, "pilot_constellation",
          "only qpsk pilots are supported");
}

Observation Observation::columns(Eigen::Index first, Eigen::Index count) const {
  Observation out;
  out.values = values.middleCols(first, count);
  if (re_bins.size() > 0) {
    out.re_bins = re_bins.middleCols(first, count);
    out.im_bins = im_bins.middleCols(first, count);
  }
  return out;
}

CMatrix forward(const CMatrix& H, const CMatrix& X) {
  if (H.cols() != X.rows()) {
    throw std::invalid_argument("forward: H is " + std::to_string(H.rows()) + "x" +
                                std::to_string(H.cols()) + " but X has " +
                                std::to_string(X.rows()) + " rows");
  }
  return (H * X) / std::sqrt(static_cast<double>(H.cols()));
}

Observation quantize_block(const QuantizerSpec& spec, const CMatrix& Y) {
  Observation obs;
  if (!spec.quantized()) {
    obs.values = Y;
    return obs;
  }
  obs.re_bins.resize(Y.rows(), Y.cols());
  obs.im_bins.resize(Y.rows(), Y.cols());
  obs.values.resize(Y.rows(), Y.cols());
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      const auto [bins, rep] = quantize(spec, Y(i, j));
      obs.re_bins(i, j) = bins.re_bin;
      obs.im_bins(i, j) = bins.im_bin;
      obs.values(i, j) = rep;
    }
  }
  return obs;
}

BlockInstance generate_block(const SystemConfig& config, SeedSpec seed) {
  config.validate();
  CounterRng rng(seed);
  BlockInstance block;
  block.H.resize(config.N, config.K);
  for (Eigen::Index j = 0; j < block.H.cols(); ++j) {
    for (Eigen::Index i = 0; i < block.H.rows(); ++i) {
      block.H(i, j) = rng.complex_normal(config.channel_var);
    }
  }
  block.X1 = draw_symbols(rng, config.K, config.T1, config.pilot_constellation,
                          config.pilot_power);
  block.X2 = draw_symbols(rng, config.K, config.T2, config.data_constellation,
                          config.data_power);
  // Unit-variance noise scaled afterwards, so SNR sweeps share realizations.
  block.W.resize(config.N, config.T());
  const double noise_sd = std::sqrt(config.noise_var);
  for (Eigen::Index j = 0; j < block.W.cols(); ++j) {
    for (Eigen::Index i = 0; i < block.W.rows(); ++i) {
      block.W(i, j) = noise_sd * rng.complex_normal(1.0);
    }
  }
  CMatrix X(config.K, config.T());
  X.leftCols(config.T1) = block.X1;
  X.rightCols(config.T2) = block.X2;
  block.Z = forward(block.H, X);
  block.Ytilde = quantize_block(config.quantizer, block.Z + block.W);
  return block;
}

}  // namespace qmimo
