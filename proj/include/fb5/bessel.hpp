#pragma once

#include <vector>

namespace fb5 {

/// log of the modified Bessel function of the first kind, I_order(kappa),
/// evaluated through the ascending power series in log space. All terms are
/// positive, so the sum is overflow-free and cancellation-free for any
/// order >= 0 and kappa > 0.
double log_bessel_i(double order, double kappa);

/// Table of log I_{n+1/2}(kappa) for n = 0..n_max, built with a scaled
/// downward (Miller) recurrence anchored on the closed form of I_{1/2}.
/// Much cheaper than independent series evaluations when many consecutive
/// half-integer orders are needed.
class BesselHalfTable {
public:
  explicit BesselHalfTable(double kappa, int n_max = 64);

  double kappa() const { return kappa_; }
  int capacity() const { return static_cast<int>(log_i_.size()) - 1; }

  /// log I_{n+1/2}(kappa); grows the table on demand.
  double log_half_int(int n);

private:
  void build(int n_max);

  double kappa_;
  std::vector<double> log_i_;
};

}  // namespace fb5
