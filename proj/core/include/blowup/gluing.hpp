#pragma once

#include <memory>
#include <string>
#include <vector>

#include "blowup/field.hpp"
#include "blowup/inner.hpp"
#include "blowup/modulation.hpp"
#include "blowup/outer.hpp"
#include "blowup/profile.hpp"
#include "blowup/spectrum.hpp"

namespace blowup {

struct GluingConfig {
    double T = 0.05;
    double eps_factor = 1e-4; // eps = eps_factor * T
    double R = 40.0;
    double a = 0.5;
    double nu = 1.5;
    double Zstar_amp = 0.1;   // ||Z*_0||_inf; the bump is negative at q
    double delta0 = 0.05;     // trust region: sup(|mu1'| + |xi1'|)
    double delta1 = 5.0;      // trust region: ||phi||_* + ||psi||_inf
    int max_iters = 60;
    double damping = 0.7;
    double lambda = 1.0;      // homotopy parameter; 1 is the full problem
    bool homotopy_fallback = true;
    int k_bubbles = 1;        // only one bubble supported
    double tol = 1e-9;        // Picard increment tolerance, relative to Zstar_amp
    double time_shrink = 0.96;
    int inner_nodes = 280;
    int outer_per_decade = 26;
    bool with_mode1 = false;
    unsigned seed = 2024;

    WeightSpec weights() const { return WeightSpec{a, nu, R}; }
    void validate() const;
};

/// Per-iteration diagnostics of the fixed point.
struct IterStats {
    int iter = 0;
    double inc_psi = 0.0, inc_phi = 0.0, inc_mu1 = 0.0, inc_xi1 = 0.0;
    double total_inc = 0.0;
    double contraction = 0.0; // total_inc ratio to the previous iteration
    double norm_psi_inf = 0.0;
    double norm_phi_star = 0.0;
    double mu1_bound = 0.0;  // sup |mu1|/(T-t)^2
    double xi1_bound = 0.0;  // sup |xi1|/(T-t)^2
    double c_resid_rel = 0.0; // max_j,t |c_j[H]| relative to the term scale
    double norm_H = 0.0;
    double ell = 0.0;
};

/// Per-term weighted-source norms of the outer source assembly.
struct GTermNorms {
    double g1 = 0.0; // p mu^{-2}(1-eta) U^{p-1}(Z*+psi)
    double g2 = 0.0; // mu^{-7/2} E (1-eta)
    double A = 0.0;
    double B = 0.0;
    double N = 0.0;
    double total = 0.0;
};

struct GluingState {
    GluingConfig cfg;
    std::unique_ptr<RadialGrid> inner_grid;
    std::unique_ptr<RadialGrid> outer_grid;
    std::unique_ptr<TimeGrid> times;

    EigenPair eig;
    CoreIntegrals integrals;
    double beta = 0.0, alpha_star = 0.0, gamma = 1.0;
    double Zq0 = 0.0; // Z*_0(q) (negative)

    Background bg;
    BubbleTrajectory traj;
    std::vector<double> F_eff;                 // damped dilation-projection drive
    bool F_eff_init = false;
    std::array<std::vector<double>, 5> g1_eff; // forcing carried by xi1
    ModeField phi, psi;
    std::vector<double> z0_nodes; // Z0 on the inner grid
    double ell = 0.0;

    std::vector<IterStats> log;
    GTermNorms g_terms;
    double norm_H_bound_const = 0.0; // ||H||_{2+a,nu} / (||psi||_inf + ||Z*||_inf)
    bool converged = false;
    bool trust_region_violation = false;
    std::string abort_reason;

    double mu_of_knot(std::size_t k) const { return traj.mu(k); }
};

// ---- pointwise ingredients ---------------------------------------------------

/// E(y,t) = mu mu' [ y . grad U + (3/2) U ] + mu xi' . grad U  (exact).
double error_E(const Point5& y, const BubbleParams& params);

/// N(Z) = |U+Z|^{p-1}(U+Z) - U^p - p U^{p-1} Z, the quadratic-and-higher
/// remainder of the nonlinearity around the bubble value U_val > 0.
double nonlinearity_N(double Z, double U_val);

// ---- assembly ------------------------------------------------------------------

/// Inner source H on B_2R at every knot: the (Z*+psi) coupling plus E, with
/// the homotopy parameter multiplying the deviation of the background from its
/// frozen center value. Uses the trajectory stored in `state`.
ModeField assemble_H(const GluingState& state);

/// Source part of H without the E terms (what the parameter projections see).
ModeField assemble_H_source(const GluingState& state);

/// Outer source G on Omega at every knot; fills per-term norms into `terms`.
ModeField assemble_G(const GluingState& state, GTermNorms& terms);

// ---- the fixed point ------------------------------------------------------------

GluingState init_gluing(const GluingConfig& cfg);

/// One damped update of all four unknowns in the order psi -> (mu1, xi1) -> phi.
IterStats picard_step(GluingState& state);

/// Run the damped iteration to convergence (with the optional homotopy ramp
/// fallback); throws ToleranceError on trust-region exit.
GluingState run_gluing(const GluingConfig& cfg);

// ---- outputs ----------------------------------------------------------------------

/// Full ansatz-plus-remainder u(x, t) at an arbitrary point (linear in t
/// between knots). x is measured from the domain center q.
double assemble_solution(const GluingState& state, const Point5& x, double t);

/// sup_x |u(., t_k)| for every knot.
std::vector<double> u_inf_series(const GluingState& state);

struct RateFit {
    double mu_slope = 0.0;
    double p_inf_slope = 0.0;
    bool typeII = false;   // (T-t)^{3/4} ||u||_inf increasing on the last decade
    double decades = 0.0;  // log10 span of the fit window
};

/// Log-log slope fits of mu and ||u||_inf against T-t on the window
/// [wlo*(T), whi*T] of T-t values.
RateFit rate_fit(const TimeGrid& tg, const std::vector<double>& mu,
                 const std::vector<double>& uinf, double wlo_over_eps = 10.0,
                 double whi_frac = 0.2);

struct ResidualAudit {
    double inner_weighted = 0.0; // H-weight norm of S(u) over |y| <= R
    double outer_weighted = 0.0; // outer source norm of S(u) on s >= R mu
    double floor_inner = 0.0;    // same machinery on the exact-bubble reference
    double floor_outer = 0.0;
};

/// Evaluate S(u) = -u_t + Lap u + |u|^{p-1} u by finite differences of the
/// assembled solution, in weighted norms, together with the audit machinery's
/// own floor measured on a field whose S is known in closed form.
ResidualAudit residual_audit(const GluingState& state);

} // namespace blowup
