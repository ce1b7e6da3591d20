#pragma once

namespace phtomo {

/// Bessel function of the first kind, order zero.
///
/// Uses the ascending power series (at least 25 terms) for |x| <= 12 and
/// the Hankel asymptotic expansion beyond that. Even in x.
double bessel_j0(double x);

}  // namespace phtomo
