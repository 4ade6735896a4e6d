#pragma once

#include <array>
#include <functional>
#include <vector>

#include "blowup/field.hpp"
#include "blowup/modulation.hpp"
#include "blowup/stepper.hpp"

namespace blowup {

/// Parameters of the weighted norms: spatial decay a in (0,1), temporal
/// exponent nu (default (n-2)/2 = 3/2), inner radius R.
struct WeightSpec {
    double a = 0.5;
    double nu = 1.5;
    double R = 40.0;
    void validate() const;
};

/// sup over the cylinder of |h| (1+|y|^{2+a}) / mu0(t)^nu, mu0 = (T-t)^2.
double norm_source(const ModeField& h, const WeightSpec& w);

/// sup of |phi| (1+|y|^{n+1}) / (mu0^nu R^{n+1-a}) with n+1 = 6.
double norm_solution(const ModeField& phi, const WeightSpec& w);

/// Same weight applied to (1+|y|) |grad phi|; the gradient is taken from the
/// discrete profiles (radial derivative plus the angular part of degree 1).
double norm_solution_gradient(const ModeField& phi, const WeightSpec& w);

/// h -> (h - sum_j c_j[h] Z_j, c_j time series); exact against the node
/// quadrature, so re-projection of the output returns zeros to roundoff.
std::array<std::vector<double>, 6> project_off_kernel(ModeField& h, const KernelTable& kt);

struct InnerOptions {
    Scheme scheme = Scheme::BDF2;
    bool reproject = true;
    bool rescaled_time = false; // solve in tau with unit coefficient instead of t
    double blowup_guard = 1e6;  // flag threshold on norm_phi / norm_h
};

struct InnerSolution {
    ModeField phi;
    double ell = 0.0;
    double norm_h = 0.0;
    double norm_phi = 0.0;
    double norm_grad = 0.0;
    /// (|ell| + grad + phi) / norm_h, the per-solve operator ratio
    double ratio = 0.0;
    double ortho_drift_max = 0.0; // max |int phi Z_j dy| / ||phi||_2 after projection
    bool blowup_flag = false;     // unstable mode not canceled (ell mismatch)
};

/// March mu^2 phi_t = Lap phi + p U^{p-1} phi + h_bar on B_2R x [0, T-eps]
/// with phi(.,0) = ell Z0, homogeneous Dirichlet at |y| = 2R, and per-step
/// kernel re-projection. h_bar must already satisfy the orthogonality
/// conditions; z0_nodes are Z0 samples on h_bar's grid.
InnerSolution solve_inner(const ModeField& h_bar, double ell,
                          const std::vector<double>& z0_nodes, const BubbleTrajectory& traj,
                          const WeightSpec& w, const InnerOptions& opts = {});

/// Build the canonical sample sources for the operator-constant measurement;
/// deterministic given the seed.
std::vector<ModeField> tin_sample_sources(const RadialGrid& grid, const TimeGrid& tg,
                                          const WeightSpec& w, unsigned seed);

struct TinMeasurement {
    double C = 0.0;
    std::vector<double> per_sample;
};

/// max over samples of (|ell| + ||(1+|y|) grad phi||_* + ||phi||_*) / ||h||;
/// ell is supplied by the damped-weight functional, as in the gluing loop.
TinMeasurement measure_Tin_constant(const WeightSpec& w, double T, double eps_factor,
                                    double Zq_abs, double beta,
                                    const std::function<double(double)>& z0_eval,
                                    int grid_nodes = 260, unsigned seed = 2024,
                                    const InnerOptions& opts = {});

} // namespace blowup
