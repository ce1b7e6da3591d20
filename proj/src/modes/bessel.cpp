#include "phtomo/modes/bessel.hpp"

#include <cmath>
#include <numbers>

namespace phtomo {
namespace {

constexpr double kSeriesLimit = 12.0;
constexpr int kMinSeriesTerms = 25;

double j0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (k >= kMinSeriesTerms && std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// J0(x) = sqrt(2/(pi x)) [P cos(x - pi/4) - Q sin(x - pi/4)], x large, with
// P = b0 - b2 + b4 - ..., Q = -b1 + b3 - ..., b_k = prod_{m<=k} (2m-1)^2 / (k! (8x)^k).
double j0_asymptotic(double x) {
  const double eight_x = 8.0 * x;
  double p = 1.0;
  double q = 0.0;
  double b = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = b * (odd * odd) / (static_cast<double>(k) * eight_x);
    // Stop at the smallest term; the series is only asymptotic.
    if (next > b) break;
    b = next;
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 1) {
      q -= sign * b;
    } else {
      p += sign * b;
    }
    if (b < 1e-17) break;
  }
  const double phase = x - 0.25 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(phase) - q * std::sin(phase));
}

}  // namespace

double bessel_j0(double x) {
  const double ax = std::abs(x);
  if (ax <= kSeriesLimit) return j0_series(ax);
  return j0_asymptotic(ax);
}

}  // namespace phtomo
