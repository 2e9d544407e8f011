#include "chargeprice/latency.hpp"

#include <cmath>

namespace chargeprice {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

double VolumeDelay::value(double x) const { return free + coeff * ipow(x, power); }

double VolumeDelay::derivative(double x) const {
  return coeff * power * ipow(x, power - 1);
}

double VolumeDelay::integral(double x) const {
  return free * x + coeff * ipow(x, power + 1) / (power + 1);
}

double VolumeDelay::integral_delta(double x, double dx) const {
  // a^q - b^q = (a - b) * sum_i a^i b^(q-1-i)
  const double a = x + dx;
  const int q = power + 1;
  double sum = 0.0;
  double ai = 1.0;
  for (int i = 0; i < q; ++i) {
    sum += ai * ipow(x, q - 1 - i);
    ai *= a;
  }
  return free * dx + coeff * dx * sum / q;
}

VolumeDelay VolumeDelay::bpr(double free_time, double capacity) {
  return {free_time, 0.15 * free_time / ipow(capacity, 4), 4};
}

VolumeDelay VolumeDelay::charging_cubic(double free_time, double wait_coeff, double capacity) {
  return {free_time, wait_coeff / ipow(capacity, 3), 3};
}

VolumeDelay VolumeDelay::linear(double free_time, double capacity) {
  return {free_time, free_time / capacity, 1};
}

double latency_arc(double x, double free_time, double capacity) {
  return free_time * (1.0 + 0.15 * ipow(x / capacity, 4));
}

double latency_fcs(double x, double free_time, double wait_coeff, double capacity) {
  return free_time + wait_coeff * ipow(x / capacity, 3);
}

}  // namespace chargeprice
