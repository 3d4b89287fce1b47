#include "qmimo/quantizer.hpp"

#include "qmimo/numerics.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace qmimo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.41421356237309504880;

void check_bin(const QuantizerSpec& spec, int bin) {
  if (!spec.quantized()) {
    throw std::invalid_argument("bin probabilities require a finite-bit quantizer");
  }
  if (bin < 1 || bin > spec.num_bins()) {
    throw std::out_of_range("bin index " + std::to_string(bin) + " outside 1.." +
                            std::to_string(spec.num_bins()));
  }
}

void check_variance(double v) {
  if (!(v > 0.0)) throw std::invalid_argument("variance must be positive");
}

// Phi(hi) - Phi(lo) for lo < hi, using whichever tail avoids cancellation.
double normal_interval_mass(double lo, double hi) {
  if (lo > 0.0) return q_function(lo) - q_function(hi);
  return std_normal_cdf(hi) - std_normal_cdf(lo);
}

}  // namespace

QuantizerSpec make_quantizer(int bits, double step) {
  if (bits < 1 || bits > 12) {
    throw std::invalid_argument("quantizer bits must be in 1..12, got " + std::to_string(bits));
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("quantizer step must be positive and finite");
  }
  QuantizerSpec spec;
  spec.bits = bits;
  spec.step = step;
  spec.mode = QuantizerMode::finite_bit;
  const int levels = 1 << bits;
  const int half = levels / 2;
  spec.thresholds.resize(static_cast<std::size_t>(levels) + 1);
  spec.thresholds.front() = -kInf;
  spec.thresholds.back() = kInf;
  for (int b = 1; b < levels; ++b) {
    spec.thresholds[static_cast<std::size_t>(b)] = static_cast<double>(b - half) * step;
  }
  spec.representatives.resize(static_cast<std::size_t>(levels));
  for (int b = 1; b < levels; ++b) {
    spec.representatives[static_cast<std::size_t>(b - 1)] =
        spec.thresholds[static_cast<std::size_t>(b)] - 0.5 * step;
  }
  spec.representatives.back() =
      spec.thresholds[static_cast<std::size_t>(levels - 1)] + 0.5 * step;
  return spec;
}

QuantizerSpec make_unquantized() {
  QuantizerSpec spec;
  spec.mode = QuantizerMode::unquantized;
  return spec;
}

int quantize_real(const QuantizerSpec& spec, double value) {
  if (!spec.quantized()) {
    throw std::invalid_argument("quantize_real requires a finite-bit quantizer");
  }
  // First threshold >= value; r_0 = -inf never matches a finite value.
  const auto it = std::lower_bound(spec.thresholds.begin(), spec.thresholds.end(), value);
  return static_cast<int>(it - spec.thresholds.begin());
}

std::pair<BinIndexPair, std::complex<double>> quantize(const QuantizerSpec& spec,
                                                       std::complex<double> y) {
  if (!spec.quantized()) return {BinIndexPair{}, y};
  const BinIndexPair bins{quantize_real(spec, y.real()), quantize_real(spec, y.imag())};
  return {bins, {spec.representative(bins.re_bin), spec.representative(bins.im_bin)}};
}

double bin_prob(const QuantizerSpec& spec, int bin, double x, double v) {
  check_bin(spec, bin);
  check_variance(v);
  const double scale = kSqrt2 / std::sqrt(v);
  const double lo = (spec.lower(bin) - x) * scale;
  const double hi = (spec.upper(bin) - x) * scale;
  return std::clamp(normal_interval_mass(lo, hi), 0.0, 1.0);
}

double bin_prob_deriv(const QuantizerSpec& spec, int bin, double x, double v) {
  check_bin(spec, bin);
  check_variance(v);
  const double scale = kSqrt2 / std::sqrt(v);
  const double lo = (spec.lower(bin) - x) * scale;
  const double hi = (spec.upper(bin) - x) * scale;
  return scale * (std_normal_pdf(lo) - std_normal_pdf(hi));
}

std::optional<TruncatedMoments> truncated_gauss_moments(double lo, double hi, double mean,
                                                        double var) {
  if (!(lo < hi)) throw std::invalid_argument("truncated_gauss_moments: need lo < hi");
  check_variance(var);
  const double sd = std::sqrt(var);
  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  // Work in the upper half-line so the interval mass is a difference of
  // upper-tail probabilities.
  const bool mirrored = b <= 0.0;
  if (mirrored) {
    const double t = a;
    a = -b;
    b = -t;
  }

  double shift = 0.0;   // standardized mean offset
  double factor = 1.0;  // standardized variance
  const double width = b - a;
  if (width < 1e-4) {
    const double mid = 0.5 * (a + b);
    const double w2 = width * width / 12.0;
    shift = mid - mid * w2;
    factor = w2;
    if (normal_interval_mass(a, b) < 1e-300) return std::nullopt;
  } else {
    const double mass = normal_interval_mass(a, b);
    if (!(mass >= 1e-300)) return std::nullopt;
    const double pa = std_normal_pdf(a);
    const double pb = std_normal_pdf(b);
    const double apa = std::isfinite(a) ? a * pa : 0.0;
    const double bpb = std::isfinite(b) ? b * pb : 0.0;
    shift = (pa - pb) / mass;
    factor = 1.0 + (apa - bpb) / mass - shift * shift;
  }
  factor = std::clamp(factor, std::numeric_limits<double>::min(), 1.0);
  if (mirrored) shift = -shift;
  return TruncatedMoments{mean + sd * shift, var * factor};
}

}  // namespace qmimo
