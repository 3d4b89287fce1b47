#include "qmimo/model.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace qmimo;

TEST_CASE("block dimensions and forward model") {
  SystemConfig s;
  s.K = 4;
  s.N = 12;
  s.T1 = 4;
  s.T2 = 10;
  s.quantizer = make_quantizer(2, 0.5);
  const auto b = generate_block(s, {5, 0});
  CHECK(b.H.rows() == 12);
  CHECK(b.H.cols() == 4);
  CHECK(b.X1.cols() == 4);
  CHECK(b.X2.cols() == 10);
  CHECK(b.W.cols() == 14);
  CMatrix X(4, 14);
  X << b.X1, b.X2;
  CHECK((b.Z - b.H * X / 2.0).norm() < 1e-12);
  CHECK(b.Ytilde.rows() == 12);
  CHECK(b.Ytilde.cols() == 14);
  for (int j = 0; j < 14; ++j) {
    for (int i = 0; i < 12; ++i) {
      const auto y = b.Z(i, j) + b.W(i, j);
      CHECK(b.Ytilde.re_bins(i, j) == quantize_real(s.quantizer, y.real()));
      CHECK(b.Ytilde.im_bins(i, j) == quantize_real(s.quantizer, y.imag()));
    }
  }
  CHECK_THROWS_AS(forward(b.H, b.X1.topRows(3)), std::invalid_argument);
}

TEST_CASE("qpsk symbols have the configured power") {
  SystemConfig s;
  s.K = 3;
  s.N = 3;
  s.T1 = 5;
  s.T2 = 7;
  s.data_power = 2.0;
  const auto b = generate_block(s, {1, 1});
  for (int j = 0; j < 7; ++j) {
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(b.X2(k, j).real()) == doctest::Approx(1.0));
      CHECK(std::abs(b.X2(k, j).imag()) == doctest::Approx(1.0));
    }
  }
  for (int j = 0; j < 5; ++j) CHECK(std::norm(b.X1(0, j)) == doctest::Approx(1.0));
}

TEST_CASE("generation is deterministic and noise realizations are shared across SNR") {
  SystemConfig s;
  s.K = 5;
  s.N = 9;
  s.T1 = 5;
  s.T2 = 8;
  s.noise_var = 0.1;
  const auto a = generate_block(s, {9, 3});
  const auto b = generate_block(s, {9, 3});
  CHECK(a.H == b.H);
  CHECK(a.X2 == b.X2);
  CHECK(a.W == b.W);
  s.noise_var = 0.4;
  const auto c = generate_block(s, {9, 3});
  CHECK(c.H == a.H);
  CHECK(c.X2 == a.X2);
  CHECK((c.W - 2.0 * a.W).norm() < 1e-12);
  const auto d = generate_block(s, {9, 4});
  CHECK(d.H != a.H);
}

TEST_CASE("channel statistics") {
  SystemConfig s;
  s.K = 20;
  s.N = 200;
  s.T1 = 20;
  s.T2 = 1;
  s.channel_var = 3.0;
  const auto b = generate_block(s, {2, 0});
  const double power = b.H.squaredNorm() / static_cast<double>(b.H.size());
  CHECK(std::abs(power - 3.0) < 5.0 * 3.0 / std::sqrt(4000.0));
}

TEST_CASE("validation names the field") {
  SystemConfig s;
  s.K = 0;
  try {
    s.validate();
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).rfind("system.K", 0) == 0);
  }
  s = SystemConfig{};
  s.noise_var = -1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SystemConfig{};
  s.noise_var = 0.0;
  CHECK_NOTHROW(s.validate());
  s.pilot_constellation = Constellation::circular_gaussian;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
