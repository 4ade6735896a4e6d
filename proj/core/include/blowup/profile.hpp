#pragma once

#include <array>
#include <functional>
#include <stdexcept>

#include "blowup/constants.hpp"
#include "blowup/grid.hpp"

namespace blowup {

using Point5 = std::array<double, 5>;

inline double norm5(const Point5& y) {
    double s = 0.0;
    for (double v : y) s += v * v;
    return std::sqrt(s);
}

/// Scale/center parameters of one bubble, with their time derivatives.
struct BubbleParams {
    double mu = 1.0;
    Point5 xi{};
    double mu_dot = 0.0;
    Point5 xi_dot{};
};

// ---- standard bubble U(y) = alpha5 (1+|y|^2)^{-3/2} and friends ------------

double bubble_radial(double r);        // U(r)
double bubble_radial_dr(double r);     // U'(r)
double bubble_radial_drr(double r);    // U''(r)
double bubble_pUpm1(double r);         // p U^{p-1}(r) = 35 (1+r^2)^{-2}

double standard_bubble(const Point5& y);

/// mu^{-3/2} U((x - xi)/mu); throws on mu <= 0.
double bubble_family(const Point5& x, const BubbleParams& params);

/// Kernel elements of L = Delta + p U^{p-1}: Z_i = d_i U for i = 1..5 and the
/// dilation mode Z_6 = (3/2) U + y . grad U. Index outside 1..6 throws.
double kernel_element(int i, const Point5& y);

/// Radial profiles: translations share the profile U'(r) (degree-1 sector),
/// the dilation mode z6(r) = (3/2) U + r U' lives in the radial sector.
double kernel_profile_translation(double r); // U'(r)
double kernel_profile_dilation(double r);    // z6(r)
double kernel_profile_dilation_dr(double r); // z6'(r)

// ---- cutoff -----------------------------------------------------------------

/// C^2 quintic bump eta0: 1 on s <= 1, 0 on s >= 2, fixed polynomial in
/// between so all derived constants are reproducible bit for bit.
double eta0(double s);
double eta0_d(double s);
double eta0_dd(double s);

/// eta_R(y) = eta0(|y|/R); value, radial derivative, and Laplacian at radius r.
double cutoff_eta(double r, double R);
double cutoff_eta_dr(double r, double R);
double cutoff_eta_lap(double r, double R); // eta'' + (4/r) eta'

// ---- integral table ---------------------------------------------------------

/// The quadrature identities the modulation formulas depend on. Each value is
/// computed with two independent rules; `max_rel_disagreement` records the
/// worst relative spread and compute() throws ToleranceError beyond `tol`.
struct CoreIntegrals {
    double I_Up = 0.0;       // int U^p over R^5
    double I_Z6sq = 0.0;     // int Z6^2
    double I_pUp1Z6 = 0.0;   // int p U^{p-1} Z6  ( = -(3/2) I_Up )
    double I_Z1sq = 0.0;     // int (d_1 U)^2
    double I_gradUsq = 0.0;  // int |grad U|^2
    double I_Z0sq = 0.0;     // int Z0^2 (filled by the spectrum module; 0 until then)
    double max_rel_disagreement = 0.0;
};

struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

CoreIntegrals compute_core_integrals(const RadialGrid& grid, double tol = 1e-7);

/// Truncated inner products over the ball B_{2R} used by the projections.
struct BallKernelNorms {
    double I_Z6sq_2R = 0.0;
    double I_Z1sq_2R = 0.0;
    double I_pUp1Z6_2R = 0.0;
};
BallKernelNorms compute_ball_kernel_norms(const RadialGrid& grid, double R);

// ---- residual oracle ---------------------------------------------------------

/// Richardson-extrapolated central finite differences of a closed-form radial
/// function; independent of any analytic derivative path. ell is the
/// spherical-harmonic degree: applies d_rr + (4/r) d_r - ell(ell+3)/r^2.
double fd_radial_laplacian(const std::function<double(double)>& f, double r, int ell,
                           double h_rel = 5e-3);

/// Residual of Delta U_alpha + U_alpha^p at radius r for a trial normalization
/// alpha, with the Laplacian taken by finite differences of the function.
double bubble_pde_residual(double alpha, double r);

/// Recover the bubble normalization by driving the PDE residual to zero
/// (secant iteration on alpha); the unique positive root is 15^{3/4}.
double recover_alpha();

} // namespace blowup
