#include "qmimo/priors.hpp"

#include <cmath>
#include <stdexcept>

namespace qmimo {

ScalarEstimate denoise_input(std::complex<double> r, double v, const PriorSpec& prior) {
  if (!(v > 0.0)) throw std::invalid_argument("denoise_input: v must be positive");
  switch (prior.kind) {
    case PriorSpec::Kind::known:
      return {prior.value, 0.0};
    case PriorSpec::Kind::circular_gaussian:
    case PriorSpec::Kind::channel_gaussian: {
      const double c = prior.power;
      const double gain = c / (c + v);
      return {gain * r, gain * v};
    }
    case PriorSpec::Kind::qpsk: {
      // Independent BPSK per dimension with amplitude sqrt(c/2) in noise v/2.
      const double c = prior.power;
      const double amp = std::sqrt(0.5 * c);
      const double gain = std::sqrt(2.0 * c) / v;
      const std::complex<double> mean{amp * std::tanh(gain * r.real()),
                                      amp * std::tanh(gain * r.imag())};
      return {mean, std::max(c - std::norm(mean), 0.0)};
    }
  }
  throw std::logic_error("denoise_input: unknown prior kind");
}

std::complex<double> hard_decision(std::complex<double> x, const PriorSpec& prior) {
  if (prior.kind != PriorSpec::Kind::qpsk) return x;
  const double amp = std::sqrt(0.5 * prior.power);
  return {x.real() >= 0.0 ? amp : -amp, x.imag() >= 0.0 ? amp : -amp};
}

}  // namespace qmimo
