#include "blowup/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "blowup/constants.hpp"

namespace blowup {

namespace {
constexpr double kPi = std::numbers::pi;

double tan_r(double zeta, double L) { return L * std::tan(0.5 * kPi * zeta); }
double tan_dr(double zeta, double L) {
    const double c = std::cos(0.5 * kPi * zeta);
    return L * 0.5 * kPi / (c * c);
}
} // namespace

RadialGrid RadialGrid::tan_map(int nodes, double map_L, double r_max) {
    if (nodes < 8) throw std::invalid_argument("RadialGrid: too few nodes");
    if (!(map_L > 0) || !(r_max > 0)) throw std::invalid_argument("RadialGrid: bad map params");
    RadialGrid g;
    g.map_L_ = map_L;
    g.zeta_max_ = 2.0 / kPi * std::atan(r_max / map_L);
    if (nodes % 2 != 0) ++nodes; // even interval count keeps Simpson pairs aligned
    g.zeta_.resize(nodes + 1);
    g.r_.resize(nodes + 1);
    for (int i = 0; i <= nodes; ++i) {
        g.zeta_[i] = g.zeta_max_ * i / nodes;
        g.r_[i] = tan_r(g.zeta_[i], map_L);
    }
    g.r_.front() = 0.0;
    g.r_.back() = r_max;
    std::vector<double> meas(g.r_.size());
    for (std::size_t i = 0; i < g.r_.size(); ++i) meas[i] = std::pow(g.r_[i], 4);
    // weights in r for data given at nodes: Simpson over r times r^4
    auto wr = simpson_weights(g.r_);
    g.w_.resize(g.r_.size());
    for (std::size_t i = 0; i < g.r_.size(); ++i) g.w_[i] = wr[i] * meas[i];
    return g;
}

RadialGrid RadialGrid::tan_map_halfline(int nodes, double map_L) {
    if (nodes < 8) throw std::invalid_argument("RadialGrid: too few nodes");
    const double zeta_max = 1.0 - 1.0 / nodes;
    RadialGrid g = tan_map(nodes, map_L, tan_r(zeta_max, map_L));
    g.halfline_ = true;
    return g;
}

RadialGrid RadialGrid::log_map(double s_min, double s_max, int per_decade) {
    if (!(s_min > 0) || !(s_max > s_min) || per_decade < 4)
        throw std::invalid_argument("RadialGrid: bad log map params");
    RadialGrid g;
    g.map_L_ = 0.0;
    const double decades = std::log10(s_max / s_min);
    const int n = std::max(8, int(std::ceil(decades * per_decade)));
    g.r_.resize(std::size_t(n) + 2);
    g.r_[0] = 0.0;
    for (int i = 0; i <= n; ++i) g.r_[std::size_t(i) + 1] = s_min * std::pow(s_max / s_min, double(i) / n);
    g.r_.back() = s_max;
    auto wr = simpson_weights(g.r_);
    g.w_.resize(g.r_.size());
    for (std::size_t i = 0; i < g.r_.size(); ++i) g.w_[i] = wr[i] * std::pow(g.r_[i], 4);
    return g;
}

double RadialGrid::integrate_nodes(const std::vector<double>& f) const {
    if (f.size() != r_.size()) throw std::invalid_argument("integrate_nodes: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w_[i] * f[i];
    return s;
}

double RadialGrid::integrate(const std::function<double(double)>& f, QuadRule rule,
                             double r_hi, int panels) const {
    const double L = map_L_ > 0 ? map_L_ : 10.0;
    double z_hi;
    if (r_hi < 0) {
        z_hi = halfline_ ? 1.0 : zeta_max_;
    } else {
        z_hi = 2.0 / kPi * std::atan(r_hi / L);
    }
    if (panels <= 0) panels = std::max(24, int(r_.size() / 8));
    auto sub = [&](double z) {
        // endpoint-including rules must not hit the map pole; the integrand has
        // a finite limit there for every integrable profile
        z = std::min(z, 1.0 - 1e-12);
        const double rr = tan_r(z, L);
        return f(rr) * std::pow(rr, 4) * tan_dr(z, L);
    };
    return integrate_panels(sub, 0.0, z_hi, panels, rule);
}

double RadialGrid::selfcheck_relative_error() const {
    auto f = [](double r) { return std::pow(1.0 + r * r, -4.0); };
    const double omega = omega4();
    const double byrule = omega * integrate(f, QuadRule::GaussLegendre,
                                            halfline_ ? -1.0 : r_max());
    // independent oracle: adaptive Simpson in the substituted variable r = u/(1-u)
    auto sub = [&](double u) {
        const double r = u / (1.0 - u);
        const double dr = 1.0 / ((1.0 - u) * (1.0 - u));
        return f(r) * std::pow(r, 4) * dr;
    };
    double hi = halfline_ ? 1.0 - 1e-12 : r_max() / (1.0 + r_max());
    const double oracle = omega * adaptive_simpson(sub, 0.0, hi, 1e-13);
    return std::abs(byrule - oracle) / std::abs(oracle);
}

std::vector<double> RadialGrid::derivative_nodes(const std::vector<double>& f) const {
    const std::size_t n = r_.size();
    if (f.size() != n) throw std::invalid_argument("derivative_nodes: size mismatch");
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            const double h0 = r_[1] - r_[0], h1 = r_[2] - r_[1];
            d[0] = (-(2 * h0 + h1) / (h0 * (h0 + h1))) * f[0] +
                   ((h0 + h1) / (h0 * h1)) * f[1] - (h0 / (h1 * (h0 + h1))) * f[2];
        } else if (i + 1 == n) {
            const double h0 = r_[n - 2] - r_[n - 3], h1 = r_[n - 1] - r_[n - 2];
            d[i] = (h1 / (h0 * (h0 + h1))) * f[n - 3] - ((h0 + h1) / (h0 * h1)) * f[n - 2] +
                   ((h0 + 2 * h1) / (h1 * (h0 + h1))) * f[n - 1];
        } else {
            const double h0 = r_[i] - r_[i - 1], h1 = r_[i + 1] - r_[i];
            d[i] = (-h1 / (h0 * (h0 + h1))) * f[i - 1] + ((h1 - h0) / (h0 * h1)) * f[i] +
                   (h0 / (h1 * (h0 + h1))) * f[i + 1];
        }
    }
    return d;
}

} // namespace blowup
