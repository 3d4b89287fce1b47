#pragma once

#include "qmimo/model.hpp"

#include <cstdint>

namespace qmimo {

/// Error counts and squared-error sums for one or more trials. Rates are
/// derived on demand so merging never accumulates rounded ratios.
struct TrialMetrics {
  std::int64_t bits_in_error = 0;
  std::int64_t bits_counted = 0;
  std::int64_t symbols_counted = 0;
  double sq_err_x2 = 0.0;
  std::int64_t entries_x2 = 0;
  double sq_err_h = 0.0;
  std::int64_t entries_h = 0;
  std::int64_t trials = 0;
  std::int64_t nonconverged = 0;

  double ber() const;
  double mse_x2() const;
  double mse_h() const;

  /// Associative and commutative in the integer fields.
  TrialMetrics& merge(const TrialMetrics& other);
};

/// Sign comparison per real dimension, two bits per QPSK symbol.
/// Throws std::invalid_argument on dimension mismatch.
TrialMetrics ber_qpsk(const CMatrix& hard_decisions, const CMatrix& truth);

/// Mean of |estimate - truth|^2 over all entries.
/// Throws std::invalid_argument on dimension mismatch.
double mse_normalized(const CMatrix& estimate, const CMatrix& truth);

}  // namespace qmimo
