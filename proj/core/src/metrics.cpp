#include "qmimo/metrics.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace qmimo {

namespace {

void check_dims(const CMatrix& a, const CMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

double ratio(double num, std::int64_t den) {
  return den > 0 ? num / static_cast<double>(den) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double TrialMetrics::ber() const { return ratio(static_cast<double>(bits_in_error), bits_counted); }
double TrialMetrics::mse_x2() const { return ratio(sq_err_x2, entries_x2); }
double TrialMetrics::mse_h() const { return ratio(sq_err_h, entries_h); }

TrialMetrics& TrialMetrics::merge(const TrialMetrics& o) {
  bits_in_error += o.bits_in_error;
  bits_counted += o.bits_counted;
  symbols_counted += o.symbols_counted;
  sq_err_x2 += o.sq_err_x2;
  entries_x2 += o.entries_x2;
  sq_err_h += o.sq_err_h;
  entries_h += o.entries_h;
  trials += o.trials;
  nonconverged += o.nonconverged;
  return *this;
}

TrialMetrics ber_qpsk(const CMatrix& hard, const CMatrix& truth) {
  check_dims(hard, truth, "ber_qpsk");
  TrialMetrics m;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      const auto a = hard(i, j);
      const auto b = truth(i, j);
      m.bits_in_error += (std::signbit(a.real()) != std::signbit(b.real()));
      m.bits_in_error += (std::signbit(a.imag()) != std::signbit(b.imag()));
    }
  }
  m.symbols_counted = truth.size();
  m.bits_counted = 2 * truth.size();
  return m;
}

double mse_normalized(const CMatrix& estimate, const CMatrix& truth) {
  check_dims(estimate, truth, "mse_normalized");
  if (truth.size() == 0) throw std::invalid_argument("mse_normalized: empty matrices");
  return (estimate - truth).squaredNorm() / static_cast<double>(truth.size());
}

}  // namespace qmimo
