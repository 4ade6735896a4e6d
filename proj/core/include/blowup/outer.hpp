#pragma once

#include <functional>
#include <vector>

#include "blowup/field.hpp"
#include "blowup/interp.hpp"
#include "blowup/stepper.hpp"

namespace blowup {

/// Radial solution of -Delta p = 1/(1+|y|^{2+a}) in R^5 with p ~ c_a r^{-a};
/// built once from the cumulative moment G(r) = int_0^r s^4 f ds via
/// p'(r) = -G(r)/r^4, then p by inward integration with the analytic far tail.
class NewtonianPotential {
public:
    explicit NewtonianPotential(double a);

    double a() const { return a_; }
    double value(double r) const;  // p(r)
    double dvalue(double r) const; // p'(r)
    double c_far() const { return c_far_; } // measured lim r^a p(r)

    /// Residual |-Delta p - f| at r, Laplacian by finite differences of value().
    double residual(double r) const;

private:
    double moment_at(double r) const; // G(r) = int_0^r s^4 f ds, node + local panel

    double a_ = 0.5;
    double c_far_ = 0.0;
    double B_moment_ = 0.0; // G(r) - r^{3-a}/(3-a) -> B at infinity
    std::vector<double> lr_, lp_, lg_; // node radii, p, G
    double r_lo_ = 1e-8, r_hi_ = 1e8;
    double p0_ = 0.0; // p(0)
};

/// Supersolution data for the outer weighted estimate: psi_bar = 2 p(y) + psi2(t),
/// psi2 = t + c alpha^{-1}(T^alpha - (T-t)^alpha), alpha = 3a/2, y = (x-q)/mu0(t).
struct BarrierSpec {
    double a = 0.5;
    double T = 0.05;
    double c = 0.0;         // tuned coefficient of the time part
    double gamma_sep = 0.0; // parabolic split radius |x-q| = gamma_sep sqrt(T-t)
    double ceiling_C = 0.0; // sup psi_bar / [ (1+|y|^a)^{-1} + T^{3a/2} ]
    double min_margin = 0.0;
    double margin_arg_s = 0.0, margin_arg_t = 0.0; // where the minimum sits
};

/// Auto-tune (c, gamma_sep) by bisection so the supersolution margin
///   dt psi_bar - Lap psi_bar - [ mu0^{-2}(1+|y|^{2+a})^{-1} + 1 ]
/// is >= 0 on Omega x [0, T-eps]; evaluates the margin on a log x geometric
/// sample grid and reports the minimum and the ceiling constant.
BarrierSpec tune_barrier(const NewtonianPotential& pot, double T, double eps,
                         double domain_radius = 1.0);

double barrier_value(const NewtonianPotential& pot, const BarrierSpec& b, double s, double t);
/// Pointwise margin at |x-q| = s, time t (analytic formula).
double barrier_margin_at(const NewtonianPotential& pot, const BarrierSpec& b, double s,
                         double t);

// ---- weighted norms ------------------------------------------------------------

/// Least K1 with |g| <= K1 [ mu0^{-2} (1+|y|^{2+a})^{-1} + 1 ], y = (x-q)/mu0(t).
double norm_outer_source(const ModeField& g, double a);
/// Least K2 with |psi| <= K2 [ (1+|y|^a)^{-1} + T^{3a/2} ].
double norm_outer_solution(const ModeField& psi, double a);

// ---- background and solver -------------------------------------------------------

/// Dirichlet heat evolution of the background on Omega (ball of radius 1
/// about q, radial reduction); tracks the center value Z*(q, t).
struct Background {
    ModeField field;                 // Z* snapshots on the outer grid
    std::vector<double> Zq;          // Z*(q, t_k) by near-origin extrapolation
    double Zq0 = 0.0;                // Z*_0(q)
    double sup0 = 0.0;               // ||Z*_0||_inf
    bool max_principle_ok = true;    // sup |Z*(., t)| nonincreasing
};

Background evolve_background(const std::function<double(double)>& Zstar0,
                             const RadialGrid& grid, const TimeGrid& tg,
                             Scheme scheme = Scheme::BDF2);

/// The default background: a negative C^2 plateau bump of the given amplitude,
/// flat near the center (so Z*(q, t) stays negative on the whole window) and
/// vanishing before the boundary (support is [0, 2*plateau]).
std::function<double(double)> default_background(double amplitude, double plateau = 0.48);

struct OuterField {
    ModeField psi;
    double norm_source = 0.0;
    double norm_solution = 0.0;
    double ratio = 0.0; // norm_solution / norm_source
};

/// Dirichlet heat solve psi_t = Lap psi + g with zero initial/boundary data on
/// the outer grid; g sampled on (grid x times).
OuterField solve_outer(const ModeField& g, double a, Scheme scheme = Scheme::BDF2);

/// Empirical space-time Holder quotient of psi up to time T' (seeded sample
/// pairs); diagnostic only.
double holder_diagnostic(const ModeField& psi, double T_prime, double alpha = 0.5,
                         unsigned seed = 77, int pairs = 4000);

/// Outer grid helper: log-spaced nodes from s_min to the domain radius.
RadialGrid make_outer_grid(double s_min, double domain_radius = 1.0, int per_decade = 28);

} // namespace blowup
