#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "blowup/quadrature.hpp"

namespace blowup {

/// Nonuniform radial grid shared by all solvers.
///
/// Two flavors:
///  - tan map r = L tan(pi zeta / 2) on uniform zeta in [0, zeta_max]; the
///    stretching resolves the unit-scale core while reaching an effective
///    radius of order 10^3, which the algebraically decaying profiles and the
///    weighted norms require.
///  - log map for the outer domain: geometrically spaced nodes from s_min to
///    s_max plus the origin, resolving source structure across many scales.
///
/// Node weights integrate sampled data against the radial measure r^4 dr;
/// angular factors are applied by callers. For closed-form integrands the
/// panel rules integrate in zeta over the full half line.
class RadialGrid {
public:
    static RadialGrid tan_map(int nodes, double map_L, double r_max);
    /// Full half-line grid (zeta_max = 1 - 1/nodes, effective radius ~ 2 L nodes / pi).
    static RadialGrid tan_map_halfline(int nodes, double map_L);
    static RadialGrid log_map(double s_min, double s_max, int per_decade);

    const std::vector<double>& r() const { return r_; }
    const std::vector<double>& node_weights() const { return w_; } // for sum w_i f_i = int f r^4 dr
    double r_max() const { return r_.back(); }
    double map_param() const { return map_L_; }
    std::size_t size() const { return r_.size(); }
    bool is_halfline() const { return halfline_; }

    /// sum_i w_i f_i (radial measure, no angular factor).
    double integrate_nodes(const std::vector<double>& f) const;

    /// int_0^{r_hi} f(r) r^4 dr by a composite panel rule in the map variable.
    /// r_hi <= r_max(); for half-line grids r_hi may be +inf (full R^5 radial part).
    double integrate(const std::function<double(double)>& f, QuadRule rule,
                     double r_hi = -1.0, int panels_per_node_block = 0) const;

    /// Self-check: quadrature of (1+r^2)^{-4} over R^5 (radialized, angular
    /// factor included) against an independent adaptive oracle; returns the
    /// relative disagreement. Throws nothing; callers decide the tolerance.
    double selfcheck_relative_error() const;

    /// 3-point nonuniform first derivative of sampled data.
    std::vector<double> derivative_nodes(const std::vector<double>& f) const;

private:
    RadialGrid() = default;
    std::vector<double> zeta_; // map variable (tan grids); empty for log grids
    std::vector<double> r_;
    std::vector<double> w_;
    double map_L_ = 10.0;
    double zeta_max_ = 1.0;
    bool halfline_ = false;
};

} // namespace blowup
