#pragma once

#include <functional>
#include <vector>

#include "blowup/grid.hpp"
#include "blowup/tridiag.hpp"

namespace blowup {

/// Discretization of the radial operator
///     A f = f'' + (4/r) f' - ell(ell+3)/r^2 f + V(r) f
/// by P1 finite elements against the measure r^4 dr: symmetric tridiagonal
/// stiffness K and lumped mass M with A ~ -M^{-1} K. Constants lie exactly in
/// the discrete kernel (ell = 0, V = 0) and regularity at the origin is the
/// natural boundary condition of the weighted form; homogeneous Dirichlet at
/// r_max, plus f(0) = 0 in the odd ell = 1 sector.
class RadialOperator {
public:
    RadialOperator(const RadialGrid& grid, int ell,
                   std::function<double(double)> potential = {});

    const RadialGrid& grid() const { return *grid_; }
    int ell() const { return ell_; }
    std::size_t interior_size() const { return K_.size(); }

    const SymTridiag& stiffness() const { return K_; }
    const std::vector<double>& mass() const { return M_; }

    /// k-th largest eigenvalue of A (k = 0 is the top); Sturm bisection on the
    /// pencil (K, M).
    double eigenvalue_top(int k = 0) const;
    /// M-normalized eigenvector of A for the given eigenvalue (unknown-vector).
    std::vector<double> eigenvector(double lambda) const;

    /// Slowest-decaying heat mode (potential-free operators): zero-shift power
    /// iteration on K^{-1} M, which stays accurate across many radial decades.
    /// Returns the full profile and sets lambda to the decay rate (A mode =
    /// -lambda mode).
    std::vector<double> fundamental_mode(double& lambda, int iters = 60) const;

    /// unknown vector <-> full profile on all grid nodes
    std::vector<double> to_profile(const std::vector<double>& x) const;
    std::vector<double> from_profile(const std::vector<double>& f) const;

private:
    const RadialGrid* grid_;
    int ell_;
    std::size_t lo_ = 0;
    SymTridiag K_;
    std::vector<double> M_;
};

enum class Scheme { BackwardEuler, BDF2 };

/// Implicit stepper for  c(t) u_t = A u + s(t)  on a RadialOperator, marching
/// an arbitrary increasing time grid. c(t) > 0 is the (possibly tiny) time
/// coefficient; huge effective steps land on the quasi-static solution, which
/// is exactly the bounded branch the weighted norms measure.
class HeatStepper {
public:
    HeatStepper(const RadialOperator& op, Scheme scheme = Scheme::BDF2);

    /// March from state f0 (profile values on the full grid) through times t[],
    /// with source(k) giving the profile of s(., t[k]) and coeff(k) = c at the
    /// implicit target time. on_step (optional) can post-process each new
    /// profile (e.g. kernel re-projection). Returns the profile at every knot.
    std::vector<std::vector<double>> march(
        const std::vector<double>& f0, const std::vector<double>& t,
        const std::function<std::vector<double>(std::size_t)>& source,
        const std::function<double(std::size_t)>& coeff,
        const std::function<void(std::vector<double>&, std::size_t)>& on_step = {}) const;

private:
    const RadialOperator* op_;
    Scheme scheme_;
};

} // namespace blowup
