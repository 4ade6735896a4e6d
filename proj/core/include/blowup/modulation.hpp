#pragma once

#include <functional>
#include <vector>

#include "blowup/field.hpp"
#include "blowup/grid.hpp"
#include "blowup/interp.hpp"
#include "blowup/profile.hpp"
#include "blowup/spectrum.hpp"

namespace blowup {

/// Constants of the leading modulation dynamics.
struct ModulationConstants {
    double beta_n = 0.0;     // mu' = -beta_n |Z*(q)| mu^{1/2}
    double alpha_star = 0.0; // mu_* = alpha_star (T-t)^2 = beta_n^2 Zq^2 / 4 * ...
    double gamma = 1.0;      // linearization exponent; equals 1 in n = 5
    double Zstar_at_q = 0.0;
    double lambda0 = 0.0;
};

/// beta_5 = (3/2) int U^p / int Z6^2, reconstructed from the dilation
/// projection of the leading source.
double beta_n(const CoreIntegrals& I);

/// mu_*(t) = alpha (T-t)^2 with alpha = beta^2 Zq^2 / 4; t > T rejected.
double mu_star(double t, double T, double Zq_abs, double beta);
double mu_star_dot(double t, double T, double Zq_abs, double beta);
double alpha_star_const(double Zq_abs, double beta);

/// gamma from linearizing mu' = -beta |Zq| mu^{1/2} around mu_*: identically 1.
double gamma_constant(double Zq_abs, double beta);

/// Independent check of gamma: integrate the nonlinear scale ODE from
/// perturbed initial data and fit |mu - mu_*| ~ (T-t)^gamma on a log-log window.
double fit_gamma_perturbation(double Zq_abs, double beta, double T,
                              double rel_perturbation = 1e-3);

// ---- kernel projections -------------------------------------------------------

/// Cached kernel samples and discrete inner products on B_{2R} for one grid.
struct KernelTable {
    const RadialGrid* grid = nullptr;
    double R = 0.0; // ball radius 2R is the grid's r_max
    std::vector<double> z6;     // dilation profile at nodes
    std::vector<double> z1;     // translation profile at nodes (d_r U)
    double I6 = 0.0;            // int_{B_2R} Z6^2 dy     (node quadrature)
    double I1 = 0.0;            // int_{B_2R} (d_1 U)^2 dy
    KernelTable() = default;
    KernelTable(const RadialGrid& g, double R);
};

/// c_j[h](t) over B_{2R} for one time slice of a ModeField; j in 1..6.
double c_projection(const KernelTable& kt, const ModeField& h, std::size_t knot, int j);

/// All six coefficients at one knot.
std::array<double, 6> c_projection_all(const KernelTable& kt, const ModeField& h,
                                       std::size_t knot);

// ---- the linear time operators -------------------------------------------------

/// T0[g](t) = -(T-t)^{-gamma} int_t^{T-eps} (T-s)^{gamma+1} g(s) ds
/// (adaptive quadrature; the printed solution operator of the linearized scale
/// equation, with bound |T0[g]| <= ||g|| (T-t)^2/(gamma+2)).
double T0_apply(const std::function<double(double)>& g, double gamma, double T, double eps,
                double t, double tol = 1e-12);

/// Decaying-branch variant: -(T-t)^{gamma} int_t^{T-eps} (T-s)^{1-gamma} g(s) ds.
/// Solves mu1' + gamma/(T-t) mu1 = (T-t) g with mu1(T-eps) = 0 exactly; this is
/// the branch the gluing driver iterates on (it is the one that keeps the
/// dilation projection identity satisfied at the fixed point).
double T0_decaying(const std::function<double(double)>& g, double gamma, double T, double eps,
                   double t, double tol = 1e-12);

/// T1[g](t) = int_t^{T-eps} (T-s) g(s) ds (componentwise for vector g).
double T1_apply(const std::function<double(double)>& g, double T, double eps, double t,
                double tol = 1e-12);

// ---- trajectories ---------------------------------------------------------------

/// (mu, xi) data on a TimeGrid. Derivatives are stored with the same scheme the
/// update operators satisfy pointwise, so discrete projection identities hold
/// without quadrature slack.
struct BubbleTrajectory {
    const TimeGrid* times = nullptr;
    double Zq_abs = 0.0;
    double beta = 0.0;
    std::vector<double> mu_star_v, mu_star_dot_v;
    std::vector<double> mu1, mu1_dot;
    std::array<std::vector<double>, 5> xi1, xi1_dot;

    static BubbleTrajectory leading(const TimeGrid& tg, double Zq_abs, double beta);

    double mu(std::size_t k) const { return mu_star_v[k] + mu1[k]; }
    double mu_dot(std::size_t k) const { return mu_star_dot_v[k] + mu1_dot[k]; }
    double xi1_norm(std::size_t k) const;

    /// corridor check: alpha_lo mu0 <= mu <= beta_hi mu0 with mu0 = (T-t)^2
    bool in_corridor(double alpha_lo, double beta_hi) const;

    /// mu(t) for off-knot times (monotone cubic in T-t).
    double mu_at(double t) const;

    /// monotone table of tau(t) = int_0^t mu^{-2} ds at the knots.
    std::vector<double> tau_table() const;
};

/// <ell, h> = int_0^{T-eps} e^{-tau(s)} mu(s)^{-2} (int h Z0 dy) ds, with
/// tau(s) = int_0^s mu^{-2}. With int Z0^2 dy = 1 this is the amplitude the
/// initial slice must place on the Z0 mode. q_of_s samples int h(.,s) Z0 dy.
double ell_functional(const std::function<double(double)>& q_of_s,
                      const std::function<double(double)>& mu_of_s, double T, double eps,
                      double tol = 1e-10);

/// Convenience: q(s) by node quadrature of a ModeField against a Z0 profile
/// sampled on the field's grid (linear interpolation between knots).
double ell_functional(const ModeField& h, const std::vector<double>& z0_nodes,
                      const BubbleTrajectory& traj, double tol = 1e-10);

} // namespace blowup
