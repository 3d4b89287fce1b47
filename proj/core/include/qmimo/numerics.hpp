#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace qmimo {

/// Standard normal CDF, evaluated through erfc so both tails keep relative
/// accuracy down to the subnormal range (|x| <= 38).
double std_normal_cdf(double x);

/// Gaussian tail probability Q(x) = 1 - Phi(x), without cancellation.
double q_function(double x);

/// Standard normal density; returns 0 for infinite arguments.
double std_normal_pdf(double x);

/// Nodes and weights for expectations under the standard Gaussian measure
/// Dv = exp(-v^2/2)/sqrt(2 pi) dv. Weights sum to 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;
};

/// Gauss-Hermite rule of the given order, normalized to Dv.
/// Throws std::invalid_argument for order < 2.
QuadratureRule gauss_hermite(int order);

/// Process-wide cached rule; safe to call from any thread.
const QuadratureRule& gauss_hermite_cached(int order);

struct ExpectationOptions {
  int start_order = 64;
  int max_order = 1024;
  double rel_tol = 1e-9;
  double abs_tol = 1e-15;
};

template <class F>
double integrate(const QuadratureRule& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * f(rule.nodes[i]);
  }
  return acc;
}

/// E[f(v)] for v ~ N(0,1). The Gauss-Hermite order is doubled from
/// start_order until two successive estimates agree to rel_tol (or abs_tol),
/// or max_order is reached.
template <class F>
double expect_standard_normal(F&& f, const ExpectationOptions& opts = {}) {
  int order = opts.start_order;
  double prev = integrate(gauss_hermite_cached(order), f);
  while (order < opts.max_order) {
    order *= 2;
    const double cur = integrate(gauss_hermite_cached(order), f);
    if (std::abs(cur - prev) <= opts.rel_tol * std::abs(cur) + opts.abs_tol) {
      return cur;
    }
    prev = cur;
  }
  return prev;
}

/// Identifies one reproducible random stream.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

/// Philox4x32-10 counter-based generator. The key is derived from the master
/// seed, the stream id occupies the upper half of the counter, and the draw
/// index the lower half, so distinct streams never overlap.
class CounterRng {
 public:
  using result_type = std::uint32_t;

  explicit CounterRng(SeedSpec seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }

  result_type operator()();

  /// Uniform double in the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Circular complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance);

  std::uint64_t draws() const { return block_index_; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// One Philox4x32-10 block; exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

}  // namespace qmimo
