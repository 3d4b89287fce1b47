#pragma once

#include "qmimo/numerics.hpp"
#include "qmimo/priors.hpp"
#include "qmimo/quantizer.hpp"

#include <Eigen/Core>

#include <complex>
#include <string>

namespace qmimo {

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using IMatrix = Eigen::MatrixXi;

enum class Constellation { qpsk, circular_gaussian };

std::string to_string(Constellation c);

/// Dimensions, powers and ADC of one block-fading uplink.
struct SystemConfig {
  int K = 50;   // transmit antennas (users)
  int N = 200;  // receive antennas
  int T1 = 50;  // pilot symbols per block
  int T2 = 450; // data symbols per block
  double noise_var = 0.1;
  double channel_var = 1.0;
  double pilot_power = 1.0;
  double data_power = 1.0;
  Constellation pilot_constellation = Constellation::qpsk;
  Constellation data_constellation = Constellation::qpsk;
  QuantizerSpec quantizer = make_unquantized();

  int T() const { return T1 + T2; }
  double alpha() const { return static_cast<double>(N) / K; }
  double beta1() const { return static_cast<double>(T1) / K; }
  double beta2() const { return static_cast<double>(T2) / K; }
  PriorSpec data_prior() const;
  PriorSpec channel_prior() const { return PriorSpec::channel_gaussian(channel_var); }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Quantized receiver output. Bins are only meaningful for a finite-bit
/// quantizer; `values` holds the bin representatives, or the raw samples
/// in unquantized mode.
struct Observation {
  IMatrix re_bins;
  IMatrix im_bins;
  CMatrix values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  BinIndexPair bins(Eigen::Index i, Eigen::Index j) const {
    return {re_bins(i, j), im_bins(i, j)};
  }
  /// Columns [first, first + count).
  Observation columns(Eigen::Index first, Eigen::Index count) const;
};

struct BlockInstance {
  CMatrix H;   // N x K
  CMatrix X1;  // K x T1 pilots
  CMatrix X2;  // K x T2 data
  CMatrix W;   // N x T
  CMatrix Z;   // N x T, noiseless (1/sqrt K) H [X1 X2]
  Observation Ytilde;
};

/// Z = (1/sqrt K) H X. Throws std::invalid_argument on dimension mismatch.
CMatrix forward(const CMatrix& H, const CMatrix& X);

Observation quantize_block(const QuantizerSpec& spec, const CMatrix& Y);

/// Draws one realization. Deterministic in `seed`; noise_var may be 0 here.
BlockInstance generate_block(const SystemConfig& config, SeedSpec seed);

}  // namespace qmimo
