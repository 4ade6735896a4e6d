#pragma once

#include <functional>
#include <vector>

namespace blowup {

/// Which fixed panel rule to use for composite quadrature. The two rules are
/// kept deliberately independent so that their disagreement acts as a grid
/// fault detector.
enum class QuadRule { GaussLegendre, ClenshawCurtis };

/// Integrate f over [a,b] with `panels` equal subintervals of the given rule
/// (16-point Gauss-Legendre or 17-point Clenshaw-Curtis per panel).
double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        int panels, QuadRule rule);

/// Adaptive Simpson with absolute/relative tolerance; independent oracle used
/// by grid self-checks and tests.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 48);

/// Composite Simpson on sampled values over nodes x (uses local 3-point fits,
/// valid for nonuniform spacing; x strictly increasing).
double simpson_nonuniform(const std::vector<double>& x, const std::vector<double>& y);

/// Per-node weights w_i such that sum_i w_i y_i reproduces
/// simpson_nonuniform(x, y) for any sampled data y.
std::vector<double> simpson_weights(const std::vector<double>& x);

} // namespace blowup
