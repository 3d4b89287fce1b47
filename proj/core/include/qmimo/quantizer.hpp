#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace qmimo {

enum class QuantizerMode { finite_bit, unquantized };

/// Uniform B-bit mid-rise quantizer applied separately to the real and
/// imaginary parts. Bins are 1-based: bin b covers (r_{b-1}, r_b] with
/// r_0 = -inf and r_{2^B} = +inf.
struct QuantizerSpec {
  int bits = 0;
  double step = 0.0;
  std::vector<double> thresholds;       // r_0 .. r_{2^B}
  std::vector<double> representatives;  // index b-1 holds bin b
  QuantizerMode mode = QuantizerMode::unquantized;

  bool quantized() const { return mode == QuantizerMode::finite_bit; }
  int num_bins() const { return quantized() ? (1 << bits) : 0; }
  double lower(int bin) const { return thresholds[static_cast<std::size_t>(bin - 1)]; }
  double upper(int bin) const { return thresholds[static_cast<std::size_t>(bin)]; }
  double representative(int bin) const {
    return representatives[static_cast<std::size_t>(bin - 1)];
  }
};

/// Throws std::invalid_argument unless 1 <= bits <= 12 and step > 0.
QuantizerSpec make_quantizer(int bits, double step);

/// Pass-through marker: downstream code uses Gaussian likelihoods instead of
/// bin probabilities.
QuantizerSpec make_unquantized();

struct BinIndexPair {
  int re_bin = 1;
  int im_bin = 1;
  friend bool operator==(const BinIndexPair&, const BinIndexPair&) = default;
};

/// Bin index b with value in (r_{b-1}, r_b].
int quantize_real(const QuantizerSpec& spec, double value);

std::pair<BinIndexPair, std::complex<double>> quantize(const QuantizerSpec& spec,
                                                       std::complex<double> y);

/// Psi_b(x) = Phi(sqrt2 (r_b - x)/sqrt(v)) - Phi(sqrt2 (r_{b-1} - x)/sqrt(v)):
/// probability that a real sample with mean x and noise variance v/2 lands in
/// bin b. Throws for v <= 0 or an out-of-range bin.
double bin_prob(const QuantizerSpec& spec, int bin, double x, double v);

/// d Psi_b / dx.
double bin_prob_deriv(const QuantizerSpec& spec, int bin, double x, double v);

struct TruncatedMoments {
  double mean = 0.0;
  double var = 0.0;
};

/// Mean and variance of N(mean, var) conditioned on (lo, hi]. Returns
/// std::nullopt when the interval mass underflows (< 1e-300).
std::optional<TruncatedMoments> truncated_gauss_moments(double lo, double hi, double mean,
                                                        double var);

}  // namespace qmimo
