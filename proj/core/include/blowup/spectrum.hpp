#pragma once

#include <vector>

#include "blowup/grid.hpp"
#include "blowup/interp.hpp"

namespace blowup {

struct DecayFit {
    double amplitude = 0.0; // prefactor A in A r^{-power} e^{-rate r}
    double rate = 0.0;
    double power = 0.0;
    double residual = 0.0;  // rms residual of log z on the window
};

/// Least-squares fit of log z against log A - rate*r - power*log r on the
/// samples with r in [r_lo, r_hi]. All z must be positive there.
DecayFit decay_fit(const std::vector<double>& r, const std::vector<double>& z,
                   double r_lo, double r_hi);

/// Top eigenpair of L0 = Delta + p U^{p-1} on radial functions in R^5.
///
/// The eigenfunction is stored both as grid samples and as an evaluator whose
/// far tail is rebuilt by inward integration at the converged eigenvalue:
/// inverse-iteration eigenvector entries below the roundoff floor carry no
/// information, while the marched tail is accurate down to ~1e-300.
struct EigenPair {
    double lambda0 = 0.0;
    double lambda_second = 0.0;   // next discrete eigenvalue (gap check)
    double gap() const { return lambda0 - lambda_second; }
    double lambda0_fd = 0.0;      // Richardson-extrapolated finite differences
    double lambda0_collocation = 0.0; // Gauss-collocation shooting cross-check
    double cross_rel_diff = 0.0;
    double R_trunc = 0.0;
    double boundary_decay = 0.0;  // e^{-sqrt(lambda0) R_trunc}

    std::vector<double> r;  // grid radii
    std::vector<double> z0; // normalized profile, int Z0^2 dy = 1, Z0(0) > 0
    double I_Z0sq = 0.0;    // quadrature of the normalized profile (should be 1)

    DecayFit decay;         // fit on the standard window [20, 60]

    double z0_at(double rr) const;

    // interpolation internals
    Pchip core_interp;      // log z0 on [0, r_match]
    double r_match = 0.0;
    Pchip tail_interp;      // log z0 on [r_match, R_trunc]
    double z0_origin = 0.0;
};

struct SpectrumOptions {
    double R_trunc = 70.0;
    int fd_nodes = 1600;     // base grid; Richardson uses x2 and x4
    double map_L = 10.0;
    double boundary_tol = 1e-10; // required e^{-sqrt(lambda0) R}; enlarges R if violated
    double cross_tol = 1e-6;     // FD vs collocation relative agreement
};

EigenPair solve_eigenpair(const SpectrumOptions& opts = {});

/// Rayleigh quotient of the discrete eigenvector against the discrete
/// operator; equals lambda0 to eigensolver tolerance.
double rayleigh_quotient_fd(const SpectrumOptions& opts, double& lambda_out);

} // namespace blowup
