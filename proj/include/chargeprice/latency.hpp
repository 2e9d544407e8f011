#pragma once

namespace chargeprice {

/// Volume-delay function t(x) = free + coeff * x^power.
///
/// Covers the BPR road latency, the cubic charging-queue latency, and a
/// linear form used for hand-checkable fixtures.
struct VolumeDelay {
  double free = 0.0;
  double coeff = 0.0;
  int power = 1;

  double value(double x) const;
  double derivative(double x) const;
  /// Integral of t over [0, x].
  double integral(double x) const;
  /// integral(x + dx) - integral(x), evaluated without cancellation.
  double integral_delta(double x, double dx) const;

  static VolumeDelay bpr(double free_time, double capacity);
  static VolumeDelay charging_cubic(double free_time, double wait_coeff, double capacity);
  /// free_time * (1 + x / capacity) for roads.
  static VolumeDelay linear(double free_time, double capacity);
};

/// t0 (1 + 0.15 (x/u)^4)
double latency_arc(double x, double free_time, double capacity);
/// t0 + tbar (x/u)^3
double latency_fcs(double x, double free_time, double wait_coeff, double capacity);

}  // namespace chargeprice
