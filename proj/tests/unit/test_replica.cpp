#include "qmimo/replica.hpp"

#include "qmimo/numerics.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

using namespace qmimo;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double simpson_gauss(F&& f, double sd = 1.0, double mean = 0.0, int n = 8000) {
  const double a = -12.0, b = 12.0, h = (b - a) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double v = a + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * std_normal_pdf(v) * f(mean + sd * v);
  }
  return acc * h / 3.0;
}

// Sum over bins of (dPsi/dV)^2 / Psi with V = sqrt(m) v, built from the
// per-dimension bin probabilities (mean V / sqrt2).
double chi_oracle(double m, double s, const QuantizerSpec& spec) {
  return simpson_gauss([&](double V) {
    double acc = 0.0;
    for (int b = 1; b <= spec.num_bins(); ++b) {
      const double x = V / std::sqrt(2.0);
      const double p = bin_prob(spec, b, x, s);
      if (p < 1e-300) continue;
      const double d = bin_prob_deriv(spec, b, x, s) / std::sqrt(2.0);
      acc += d * d / p;
    }
    return acc;
  }, std::sqrt(m));
}

double qpsk_mmse_oracle(double qt, double c) {
  const double a = std::sqrt(c / 2.0);
  const double g = std::sqrt(qt);
  const double per_dim = simpson_gauss([&](double n) {
    const double y = g * a + n;
    const double est = a * std::tanh(2.0 * g * a * y);
    return (a - est) * (a - est);
  }, std::sqrt(0.5));
  return 2.0 * per_dim;
}

ReplicaConfig small_config(int bits, double noise_var) {
  ReplicaConfig c;
  c.alpha = 4.0;
  c.beta1 = 1.0;
  c.beta2 = 9.0;
  c.noise_var = noise_var;
  c.quantizer = bits > 0 ? make_quantizer(bits, 0.5) : make_unquantized();
  return c;
}

}  // namespace

TEST_CASE("chi matches direct integration") {
  for (int bits : {1, 2, 3}) {
    const auto q = make_quantizer(bits, 0.5);
    for (double qh : {0.0, 0.3, 0.9}) {
      for (double qx : {0.2, 0.95}) {
        const double m = qh * qx;
        const double s = 0.1 + 1.0 - m;
        CHECK(chi(qh, qx, 1.0, 1.0, 0.1, q) == doctest::Approx(chi_oracle(m, s, q)).epsilon(1e-6));
      }
    }
  }
  // One bit at zero overlap and unit effective variance: 2 / pi.
  CHECK(chi(0.0, 0.0, 0.0, 1.0, 1.0, make_quantizer(1, 1.0)) ==
        doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-10));
  CHECK(chi(0.0, 0.0, 1.0, 1.0, 1.0, make_quantizer(1, 1.0)) ==
        doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-10));
  CHECK(chi(0.5, 0.4, 1.0, 1.0, 0.3, make_unquantized()) == doctest::Approx(1.0 / 1.1));
  CHECK_THROWS_AS(chi(1.0, 1.1, 1.0, 1.0, 0.1, make_unquantized()), std::invalid_argument);
}

TEST_CASE("fine quantization approaches the unquantized chi") {
  const auto fine = make_quantizer(10, 0.01);
  const double exact = chi(0.5, 1.0, 1.0, 1.0, 0.5, make_unquantized());
  CHECK(chi(0.5, 1.0, 1.0, 1.0, 0.5, fine) == doctest::Approx(exact).epsilon(2e-3));
}

TEST_CASE("output free entropy derivative is chi") {
  const auto q = make_quantizer(2, 0.6);
  const double m = 0.4, h = 1e-5;
  const double fd =
      (output_free_entropy(m + h, 1.0, 0.2, q) - output_free_entropy(m - h, 1.0, 0.2, q)) /
      (2 * h);
  CHECK(fd == doctest::Approx(chi(m, 1.0, 1.0, 1.0, 0.2, q)).epsilon(1e-5));
}

TEST_CASE("scalar channel mmse and information") {
  CHECK(scalar_mmse(0.0, PriorSpec::qpsk(1.0)) == doctest::Approx(1.0));
  CHECK(scalar_mmse(3.0, PriorSpec::circular_gaussian(2.0)) == doctest::Approx(2.0 / 7.0));
  CHECK(scalar_mmse(5.0, PriorSpec::known({1.0, 0.0})) == 0.0);
  for (double qt : {0.1, 1.0, 4.0, 20.0}) {
    CHECK(scalar_mmse(qt, PriorSpec::qpsk(1.0)) ==
          doctest::Approx(qpsk_mmse_oracle(qt, 1.0)).epsilon(1e-7));
    // I-MMSE: dI/dqt = mmse.
    for (auto prior : {PriorSpec::qpsk(1.0), PriorSpec::circular_gaussian(1.5)}) {
      const double h = 1e-5 * qt;
      const double fd = (scalar_mutual_information(qt + h, prior) -
                         scalar_mutual_information(qt - h, prior)) /
                        (2 * h);
      CHECK(fd == doctest::Approx(scalar_mmse(qt, prior)).epsilon(1e-5));
    }
  }
  CHECK(scalar_mutual_information(1e6, PriorSpec::qpsk(1.0)) ==
        doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-9));
  for (double target : {0.9, 0.5, 0.01, 1e-6}) {
    const double qt = invert_scalar_mmse(target, PriorSpec::qpsk(1.0));
    CHECK(scalar_mmse(qt, PriorSpec::qpsk(1.0)) == doctest::Approx(target).epsilon(1e-8));
  }
  CHECK(invert_scalar_mmse(0.0, PriorSpec::qpsk(1.0)) == kInf);
  CHECK(invert_scalar_mmse(1.0, PriorSpec::qpsk(1.0)) == 0.0);
}

TEST_CASE("perfect-csi fixed point matches bisection") {
  for (int bits : {0, 1, 3}) {
    ReplicaConfig c = small_config(bits, 0.1);
    c.mode = ReplicaMode::perfect_csi;
    const auto prior = c.x2_prior();
    auto g = [&](double q) { return c.c_x2 - scalar_mmse(perfect_csi_sinr(q, c), prior) - q; };
    double lo = 0.0, hi = c.c_x2;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? lo : hi) = mid;
    }
    const auto sol = solve_perfect_csi(c);
    CHECK(sol.converged);
    CHECK(sol.q_x2 == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-7));
    CHECK(sol.mse_h == 0.0);
    CHECK(perfect_csi_sinr(0.7, c) ==
          doctest::Approx(c.alpha * c.c_h * chi(c.c_h, 0.7, c.c_h, c.c_x2, c.noise_var,
                                                c.quantizer)).epsilon(1e-9));
  }
}

TEST_CASE("very noisy systems carry no information") {
  for (int bits : {0, 2}) {
    const auto c = small_config(bits, 1e6);
    const auto sol = solve_fixed_point(c);
    CHECK(sol.converged);
    CHECK(sol.q_x2 < 1e-4);
    CHECK(predict_ber_qpsk(sol.qt_x2) == doctest::Approx(0.5).epsilon(1e-2));
    // The uninformative point dominates.
    CHECK(free_entropy({0.5, 0.5}, c) <= free_entropy({0.0, 0.0}, c));
  }
}

TEST_CASE("joint fixed point is stationary") {
  for (int bits : {0, 1, 3}) {
    const auto c = small_config(bits, 0.05);
    const auto sol = solve_fixed_point(c);
    CHECK(sol.converged);
    CHECK(fixed_point_residuals(sol, c).max() < 1e-7);
    CHECK(sol.mse_h == doctest::Approx(c.c_h - sol.q_h));
    CHECK(sol.mse_x2 == doctest::Approx(c.c_x2 - sol.q_x2));
    CHECK(free_entropy({sol.q_h, sol.q_x2}, c) == doctest::Approx(sol.free_entropy).epsilon(1e-7));
    // Differentiate in u = -log(c - q), which stays well conditioned as q -> c.
    const auto phi = [&](double uh, double ux) {
      return free_entropy({c.c_h - std::exp(-uh), c.c_x2 - std::exp(-ux)}, c);
    };
    const double uh = -std::log(c.c_h - sol.q_h);
    const double ux = -std::log(c.c_x2 - sol.q_x2);
    const double h = 1e-3;
    CHECK(std::abs(phi(uh + h, ux) - phi(uh - h, ux)) / (2 * h) < 1e-5);
    CHECK(std::abs(phi(uh, ux + h) - phi(uh, ux - h)) / (2 * h) < 1e-5);
    CHECK(sol.candidates.size() == 3);
  }
}

TEST_CASE("more bits and more snr never hurt") {
  double prev = 2.0;
  for (int bits : {1, 2, 3, 0}) {
    const double mse = solve_fixed_point(small_config(bits, 0.05)).mse_x2;
    CHECK(mse <= prev + 1e-9);
    prev = mse;
  }
  prev = 2.0;
  for (double nv : {1.0, 0.3, 0.1, 0.03}) {
    const double mse = solve_fixed_point(small_config(3, nv)).mse_x2;
    CHECK(mse <= prev + 1e-9);
    prev = mse;
  }
}

TEST_CASE("ber and rate") {
  CHECK(predict_ber_qpsk(1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-12));
  CHECK(predict_ber_qpsk(0.0) == doctest::Approx(0.5));
  CHECK(predict_ber_qpsk(kInf) == 0.0);
  CHECK(achievable_rate(3.0, PriorSpec::circular_gaussian(1.0), 0.0, 9.0) ==
        doctest::Approx(2.0));
  CHECK(achievable_rate(3.0, PriorSpec::circular_gaussian(1.0), 1.0, 9.0) ==
        doctest::Approx(1.8));
  CHECK(achievable_rate(1e6, PriorSpec::qpsk(1.0), 0.0, 1.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(achievable_rate(1.0, PriorSpec::qpsk(1.0), 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("config from system") {
  SystemConfig s;
  s.K = 10;
  s.N = 35;
  s.T1 = 10;
  s.T2 = 90;
  const auto j = ReplicaConfig::from_system(s, ReplicaMode::jcd);
  CHECK(j.alpha == doctest::Approx(3.5));
  CHECK(j.beta1 == doctest::Approx(1.0));
  CHECK(j.beta2 == doctest::Approx(9.0));
  const auto p = ReplicaConfig::from_system(s, ReplicaMode::perfect_csi);
  CHECK(p.beta1 == 0.0);
  ReplicaConfig bad;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
