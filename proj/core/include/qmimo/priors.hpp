#pragma once

#include <complex>

namespace qmimo {

/// Entry-wise prior on a signal or channel coefficient.
struct PriorSpec {
  enum class Kind { known, qpsk, circular_gaussian, channel_gaussian };

  Kind kind = Kind::circular_gaussian;
  std::complex<double> value{};  // known only
  double power = 1.0;            // E|x|^2; unused for known

  static PriorSpec known(std::complex<double> v) { return {Kind::known, v, 0.0}; }
  static PriorSpec qpsk(double power) { return {Kind::qpsk, {}, power}; }
  static PriorSpec circular_gaussian(double power) {
    return {Kind::circular_gaussian, {}, power};
  }
  static PriorSpec channel_gaussian(double variance) {
    return {Kind::channel_gaussian, {}, variance};
  }

  bool gaussian() const {
    return kind == Kind::circular_gaussian || kind == Kind::channel_gaussian;
  }
};

struct ScalarEstimate {
  std::complex<double> mean{};
  double var = 0.0;
};

/// Posterior mean and variance of x ~ prior observed as r = x + n with
/// n ~ CN(0, v). Throws std::invalid_argument for v <= 0.
ScalarEstimate denoise_input(std::complex<double> r, double v, const PriorSpec& prior);

/// Nearest constellation point for QPSK priors; identity otherwise.
std::complex<double> hard_decision(std::complex<double> x, const PriorSpec& prior);

}  // namespace qmimo
