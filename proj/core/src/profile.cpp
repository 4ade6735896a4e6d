#include "blowup/profile.hpp"

#include <cmath>

namespace blowup {

namespace {
const double kAlpha5 = Dimension{}.alpha(); // 15^{3/4}
constexpr double kP = 7.0 / 3.0;
} // namespace

double bubble_radial(double r) { return kAlpha5 * std::pow(1.0 + r * r, -1.5); }

double bubble_radial_dr(double r) { return -3.0 * kAlpha5 * r * std::pow(1.0 + r * r, -2.5); }

double bubble_radial_drr(double r) {
    const double q = 1.0 + r * r;
    return kAlpha5 * (-3.0 * std::pow(q, -2.5) + 15.0 * r * r * std::pow(q, -3.5));
}

double bubble_pUpm1(double r) {
    // p alpha^{p-1} (1+r^2)^{-2} with alpha^{p-1} = 15
    return 35.0 * std::pow(1.0 + r * r, -2.0);
}

double standard_bubble(const Point5& y) { return bubble_radial(norm5(y)); }

double bubble_family(const Point5& x, const BubbleParams& params) {
    if (!(params.mu > 0.0)) throw std::invalid_argument("bubble_family: mu must be positive");
    Point5 z;
    for (int i = 0; i < 5; ++i) z[i] = (x[i] - params.xi[i]) / params.mu;
    return std::pow(params.mu, -1.5) * standard_bubble(z);
}

double kernel_element(int i, const Point5& y) {
    if (i < 1 || i > 6) throw std::invalid_argument("kernel_element: index must be in 1..6");
    const double r = norm5(y);
    if (i <= 5) {
        if (r == 0.0) return 0.0;
        return bubble_radial_dr(r) * y[i - 1] / r;
    }
    return kernel_profile_dilation(r);
}

double kernel_profile_translation(double r) { return bubble_radial_dr(r); }

double kernel_profile_dilation(double r) {
    return 1.5 * bubble_radial(r) + r * bubble_radial_dr(r);
}

double kernel_profile_dilation_dr(double r) {
    return 2.5 * bubble_radial_dr(r) + r * bubble_radial_drr(r);
}

// ---- cutoff ------------------------------------------------------------------

double eta0(double s) {
    if (s <= 1.0) return 1.0;
    if (s >= 2.0) return 0.0;
    const double x = s - 1.0;
    // unique quintic with value/slope/curvature matching at both ends
    return 1.0 + x * x * x * (-10.0 + x * (15.0 - 6.0 * x));
}

double eta0_d(double s) {
    if (s <= 1.0 || s >= 2.0) return 0.0;
    const double x = s - 1.0;
    return x * x * (-30.0 + x * (60.0 - 30.0 * x));
}

double eta0_dd(double s) {
    if (s <= 1.0 || s >= 2.0) return 0.0;
    const double x = s - 1.0;
    return x * (-60.0 + x * (180.0 - 120.0 * x));
}

double cutoff_eta(double r, double R) {
    if (!(R > 0)) throw std::invalid_argument("cutoff_eta: R must be positive");
    return eta0(r / R);
}

double cutoff_eta_dr(double r, double R) { return eta0_d(r / R) / R; }

double cutoff_eta_lap(double r, double R) {
    if (r == 0.0) return 5.0 * eta0_dd(0.0) / (R * R);
    return eta0_dd(r / R) / (R * R) + 4.0 / r * eta0_d(r / R) / R;
}

// ---- integrals ---------------------------------------------------------------

namespace {
double dual_rule(const RadialGrid& g, const std::function<double(double)>& f, double r_hi,
                 double& worst) {
    const double a = g.integrate(f, QuadRule::GaussLegendre, r_hi);
    const double b = g.integrate(f, QuadRule::ClenshawCurtis, r_hi);
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    worst = std::max(worst, std::abs(a - b) / scale);
    return 0.5 * (a + b);
}
} // namespace

CoreIntegrals compute_core_integrals(const RadialGrid& grid, double tol) {
    CoreIntegrals out;
    double worst = 0.0;
    const double om = omega4();
    out.I_Up = om * dual_rule(grid, [](double r) { return std::pow(bubble_radial(r), kP); },
                              -1.0, worst);
    out.I_Z6sq = om * dual_rule(grid, [](double r) {
        const double z = kernel_profile_dilation(r);
        return z * z;
    }, -1.0, worst);
    out.I_pUp1Z6 = om * dual_rule(grid, [](double r) {
        return bubble_pUpm1(r) * kernel_profile_dilation(r);
    }, -1.0, worst);
    out.I_gradUsq = om * dual_rule(grid, [](double r) {
        const double d = bubble_radial_dr(r);
        return d * d;
    }, -1.0, worst);
    out.I_Z1sq = out.I_gradUsq / 5.0;
    out.max_rel_disagreement = worst;
    if (worst > tol)
        throw ToleranceError("core integrals: quadrature rules disagree beyond tolerance; "
                             "grid fault suspected");
    return out;
}

BallKernelNorms compute_ball_kernel_norms(const RadialGrid& grid, double R) {
    BallKernelNorms out;
    double worst = 0.0;
    const double twoR = 2.0 * R;
    out.I_Z6sq_2R = omega4() * dual_rule(grid, [](double r) {
        const double z = kernel_profile_dilation(r);
        return z * z;
    }, twoR, worst);
    out.I_pUp1Z6_2R = omega4() * dual_rule(grid, [](double r) {
        return bubble_pUpm1(r) * kernel_profile_dilation(r);
    }, twoR, worst);
    out.I_Z1sq_2R = omega4_mode1() * dual_rule(grid, [](double r) {
        const double d = bubble_radial_dr(r);
        return d * d;
    }, twoR, worst);
    return out;
}

// ---- residual oracle ----------------------------------------------------------

double fd_radial_laplacian(const std::function<double(double)>& f, double r, int ell,
                           double h_rel) {
    const double h = h_rel * (1.0 + r);
    auto second = [&](double hh) {
        if (r - 2.0 * hh > 0.0 || ell == 0) {
            // centered; for ell=0 even extension through r=0 is exact
            auto fe = [&](double x) { return f(std::abs(x)); };
            return (fe(r - hh) - 2.0 * f(r) + fe(r + hh)) / (hh * hh);
        }
        return (f(r) - 2.0 * f(r + hh) + f(r + 2.0 * hh)) / (hh * hh);
    };
    auto first = [&](double hh) {
        auto fe = [&](double x) { return (ell == 0) ? f(std::abs(x)) : ((x < 0) ? -f(-x) : f(x)); };
        return (fe(r + hh) - fe(r - hh)) / (2.0 * hh);
    };
    // Richardson: eliminate the h^2 term, leaving O(h^4) and below
    const double d2 = (4.0 * second(0.5 * h) - second(h)) / 3.0;
    const double d1 = (4.0 * first(0.5 * h) - first(h)) / 3.0;
    double lap = d2;
    if (r > 0.0)
        lap += 4.0 / r * d1 - double(ell * (ell + 3)) / (r * r) * f(r);
    else
        lap = 5.0 * d2; // radial regular limit at the origin (ell = 0)
    return lap;
}

double bubble_pde_residual(double alpha, double r) {
    auto U = [alpha](double rr) { return alpha * std::pow(1.0 + rr * rr, -1.5); };
    const double lap = fd_radial_laplacian(U, r, 0, 2e-3);
    return lap + std::pow(U(r), kP);
}

double recover_alpha() {
    // secant on the residual at a fixed probe radius; quadratically convergent
    const double r_probe = 0.7;
    double a0 = 5.0, a1 = 10.0;
    double f0 = bubble_pde_residual(a0, r_probe);
    double f1 = bubble_pde_residual(a1, r_probe);
    for (int it = 0; it < 60 && std::abs(a1 - a0) > 1e-13 * a1; ++it) {
        const double a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
        a0 = a1; f0 = f1;
        a1 = a2; f1 = bubble_pde_residual(a1, r_probe);
    }
    return a1;
}

} // namespace blowup
