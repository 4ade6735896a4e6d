#pragma once

#include <cmath>
#include <numbers>

namespace blowup {

/// Fixed problem dimension data for the energy-critical nonlinearity in n = 5.
///
/// The exponent is p = (n+2)/(n-2) = 7/3 and the bubble normalization is the
/// constant forced by Delta U + U^p = 0, namely alpha^{p-1} = n(n-2), so
/// alpha = 15^{3/4}. Formulas below keep n symbolic where cheap, but only
/// n = 5 is exercised.
struct Dimension {
    int n = 5;
    int p_num = 7;
    int p_den = 3;

    constexpr double p() const { return double(p_num) / double(p_den); }

    /// alpha_n with alpha_n^{p-1} = n(n-2); for n = 5 this is 15^{3/4}.
    double alpha() const { return std::pow(double(n * (n - 2)), double(n - 2) / 4.0); }
};

/// Surface measure of the unit sphere S^{n-1} in R^n.
inline double sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// |S^4| = 8 pi^2 / 3, the angular factor of radial integrals in R^5.
inline double omega4() { return sphere_area(5); }

/// Angular factor of a degree-1 component: int_{S^4} (y_j/|y|)^2 dS = |S^4|/5.
inline double omega4_mode1() { return sphere_area(5) / 5.0; }

/// sign(x) |x|^q, the odd power used by the absolute-value nonlinearity.
inline double signed_pow(double x, double q) {
    if (x == 0.0) return 0.0;
    return x > 0 ? std::pow(x, q) : -std::pow(-x, q);
}

} // namespace blowup
