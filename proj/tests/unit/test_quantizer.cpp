#include "qmimo/quantizer.hpp"

#include "qmimo/numerics.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace qmimo;

namespace {

// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("uniform quantizer thresholds and representatives") {
  const auto q = make_quantizer(2, 0.5);
  REQUIRE(q.num_bins() == 4);
  CHECK(std::isinf(q.thresholds[0]));
  CHECK(q.thresholds[1] == -0.5);
  CHECK(q.thresholds[2] == 0.0);
  CHECK(q.thresholds[3] == 0.5);
  CHECK(std::isinf(q.thresholds[4]));
  CHECK(q.representative(1) == -0.75);
  CHECK(q.representative(2) == -0.25);
  CHECK(q.representative(3) == 0.25);
  CHECK(q.representative(4) == 0.75);

  const auto one = make_quantizer(1, 0.5);
  CHECK(one.representative(1) == -0.25);
  CHECK(one.representative(2) == 0.25);

  CHECK_THROWS_AS(make_quantizer(0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_quantizer(13, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_quantizer(3, 0.0), std::invalid_argument);
  CHECK_FALSE(make_unquantized().quantized());
}

TEST_CASE("bins are right-closed") {
  const auto q = make_quantizer(2, 0.5);
  CHECK(quantize_real(q, -10.0) == 1);
  CHECK(quantize_real(q, -0.5) == 1);
  CHECK(quantize_real(q, -0.4999) == 2);
  CHECK(quantize_real(q, 0.0) == 2);
  CHECK(quantize_real(q, 1e-12) == 3);
  CHECK(quantize_real(q, 0.5) == 3);
  CHECK(quantize_real(q, 7.0) == 4);
  const auto [bins, rep] = quantize(q, {0.3, -0.7});
  CHECK(bins.re_bin == 3);
  CHECK(bins.im_bin == 1);
  CHECK(rep == std::complex<double>(0.25, -0.75));
  const auto [ubins, urep] = quantize(make_unquantized(), {0.3, -0.7});
  CHECK(urep == std::complex<double>(0.3, -0.7));
}

TEST_CASE("bin probabilities against direct integration") {
  const auto q = make_quantizer(3, 0.5);
  const double x = 0.37;
  const double v = 0.6;
  const double sd = std::sqrt(v / 2.0);
  auto density = [&](double y) { return std_normal_pdf((y - x) / sd) / sd; };
  double total = 0.0;
  for (int b = 1; b <= q.num_bins(); ++b) {
    const double lo = std::max(q.lower(b), x - 12.0 * sd);
    const double hi = std::min(q.upper(b), x + 12.0 * sd);
    const double oracle = lo < hi ? simpson(density, lo, hi, 2000) : 0.0;
    CHECK(bin_prob(q, b, x, v) == doctest::Approx(oracle).epsilon(1e-9));
    total += bin_prob(q, b, x, v);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(bin_prob(q, 0, x, v), std::out_of_range);
  CHECK_THROWS_AS(bin_prob(q, 9, x, v), std::out_of_range);
  CHECK_THROWS_AS(bin_prob(q, 1, x, 0.0), std::invalid_argument);
}

TEST_CASE("bin probability derivative matches central differences") {
  const auto q = make_quantizer(2, 0.4);
  for (double x : {-1.3, -0.2, 0.0, 0.55, 2.0}) {
    for (int b = 1; b <= 4; ++b) {
      const double h = 1e-6;
      const double fd = (bin_prob(q, b, x + h, 0.8) - bin_prob(q, b, x - h, 0.8)) / (2 * h);
      CHECK(bin_prob_deriv(q, b, x, 0.8) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("tail bins keep relative accuracy") {
  const auto q = make_quantizer(1, 0.5);
  // Bin 1 is (-inf, 0]; mean 20 with variance 0.5 per dimension puts it at
  // 20 standard deviations: mass Q(20 * sqrt2 / sqrt(1)) with v = 1.
  const double p = bin_prob(q, 1, 20.0, 1.0);
  CHECK(p == doctest::Approx(q_function(20.0 * std::sqrt(2.0))).epsilon(1e-12));
  CHECK(p > 0.0);
}

TEST_CASE("truncated gaussian moments against direct integration") {
  struct Case {
    double lo, hi, mean, var;
  };
  const Case cases[] = {
      {-0.5, 0.0, 0.1, 0.7},  {0.0, INFINITY, 0.0, 1.0},  {-INFINITY, -0.25, 0.3, 0.2},
      {1.0, 1.5, -0.4, 0.05}, {-1.0, 1.0, 0.0, 100.0},   {0.5, 0.75, 0.6, 1e-3},
  };
  for (const auto& c : cases) {
    const double sd = std::sqrt(c.var);
    const double lo = std::max(c.lo, c.mean - 14.0 * sd);
    const double hi = std::min(c.hi, c.mean + 14.0 * sd);
    auto pdf = [&](double y) { return std_normal_pdf((y - c.mean) / sd) / sd; };
    const double m0 = simpson(pdf, lo, hi, 20000);
    const double m1 = simpson([&](double y) { return y * pdf(y); }, lo, hi, 20000) / m0;
    const double m2 =
        simpson([&](double y) { return (y - m1) * (y - m1) * pdf(y); }, lo, hi, 20000) / m0;
    const auto tm = truncated_gauss_moments(c.lo, c.hi, c.mean, c.var);
    REQUIRE(tm.has_value());
    CHECK(tm->mean == doctest::Approx(m1).epsilon(1e-8));
    CHECK(tm->var == doctest::Approx(m2).epsilon(1e-7));
  }
}

TEST_CASE("truncated moments: half line and far tails") {
  // Standard normal on (0, inf): mean sqrt(2/pi), variance 1 - 2/pi.
  const auto h = truncated_gauss_moments(0.0, INFINITY, 0.0, 1.0);
  REQUIRE(h);
  CHECK(h->mean == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-14));
  CHECK(h->var == doctest::Approx(1.0 - 2.0 / M_PI).epsilon(1e-13));

  // Interval far in the upper tail: mean lies inside, variance positive.
  const auto t = truncated_gauss_moments(30.0, 31.0, 0.0, 1.0);
  REQUIRE(t);
  CHECK(t->mean > 30.0);
  CHECK(t->mean < 30.1);
  CHECK(t->var > 0.0);
  // Inverse Mills ratio asymptote: E[Y | Y > a] ~ a + 1/a.
  const auto far = truncated_gauss_moments(25.0, INFINITY, 0.0, 1.0);
  REQUIRE(far);
  CHECK(far->mean == doctest::Approx(25.0 + 1.0 / 25.0 - 2.0 / std::pow(25.0, 3)).epsilon(1e-6));

  // Mirrored lower tail.
  const auto low = truncated_gauss_moments(-INFINITY, -25.0, 0.0, 1.0);
  REQUIRE(low);
  CHECK(low->mean == doctest::Approx(-far->mean).epsilon(1e-14));

  // Mass below 1e-300 is reported as degenerate.
  CHECK_FALSE(truncated_gauss_moments(40.0, 41.0, 0.0, 1.0).has_value());

  // Very narrow interval: uniform limit.
  const auto n = truncated_gauss_moments(0.3, 0.3 + 1e-7, 0.0, 1.0);
  REQUIRE(n);
  CHECK(n->mean == doctest::Approx(0.3 + 0.5e-7).epsilon(1e-12));
  CHECK(n->var == doctest::Approx(1e-14 / 12.0).epsilon(1e-3));
  CHECK_THROWS_AS(truncated_gauss_moments(1.0, 1.0, 0.0, 1.0), std::invalid_argument);
}
