#include "blowup/outer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "blowup/constants.hpp"
#include "blowup/profile.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

// ---- Newtonian potential -------------------------------------------------------

NewtonianPotential::NewtonianPotential(double a) : a_(a) {
    if (!(a > 0.0) || !(a < 1.0))
        throw std::invalid_argument("NewtonianPotential: need 0 < a < 1");
    auto f = [a](double s) { return 1.0 / (1.0 + std::pow(s, 2.0 + a)); };
    auto mom = [&](double s) { return std::pow(s, 4.0) * f(s); };

    // node values of the moment G(r) = int_0^r s^4 f ds and of p itself;
    // evaluation between nodes re-integrates from the bracketing node, so the
    // evaluator is smooth to quadrature precision, not interpolation precision
    const int per_decade = 24;
    const double decades = std::log10(r_hi_ / r_lo_);
    const int n = int(decades * per_decade) + 1;
    std::vector<double> r(n), G(n);
    for (int i = 0; i < n; ++i) r[i] = r_lo_ * std::pow(r_hi_ / r_lo_, double(i) / (n - 1));
    G[0] = integrate_panels(mom, 0.0, r[0], 8, QuadRule::GaussLegendre);
    for (int i = 1; i < n; ++i)
        G[i] = G[i - 1] + integrate_panels(mom, r[i - 1], r[i], 8, QuadRule::GaussLegendre);
    B_moment_ = G[n - 1] - std::pow(r[n - 1], 3.0 - a) / (3.0 - a);

    lr_ = std::move(r);
    lg_ = std::move(G);

    // p at the nodes, integrating p' = -G/s^4 inward from the analytic far field
    const double p_hi = std::pow(r_hi_, -a) / (a * (3.0 - a)) +
                        B_moment_ * std::pow(r_hi_, -3.0) / 3.0;
    lp_.assign(n, 0.0);
    lp_[n - 1] = p_hi;
    for (int i = n - 2; i >= 0; --i)
        lp_[i] = lp_[i + 1] + integrate_panels([&](double s) { return moment_at(s) / std::pow(s, 4.0); },
                                               lr_[i], lr_[i + 1], 6, QuadRule::GaussLegendre);
    p0_ = lp_[0] + integrate_panels([&](double s) { return moment_at(s) / std::pow(s, 4.0); },
                                    0.0, lr_[0], 8, QuadRule::GaussLegendre);
    c_far_ = std::pow(1e6, a) * value(1e6);
}

double NewtonianPotential::moment_at(double r) const {
    auto mom = [this](double s) { return std::pow(s, 4.0) / (1.0 + std::pow(s, 2.0 + a_)); };
    if (r <= lr_.front()) return integrate_panels(mom, 0.0, r, 4, QuadRule::GaussLegendre);
    if (r >= lr_.back())
        return std::pow(r, 3.0 - a_) / (3.0 - a_) + B_moment_;
    const auto it = std::upper_bound(lr_.begin(), lr_.end(), r);
    const std::size_t j = std::size_t(it - lr_.begin()) - 1;
    return lg_[j] + integrate_panels(mom, lr_[j], r, 2, QuadRule::GaussLegendre);
}

double NewtonianPotential::value(double r) const {
    if (r >= r_hi_)
        return std::pow(r, -a_) / (a_ * (3.0 - a_)) + B_moment_ * std::pow(r, -3.0) / 3.0;
    auto integrand = [this](double s) { return moment_at(s) / std::pow(s, 4.0); };
    if (r <= lr_.front()) {
        // p(0) - p(r) = int_0^r G/s^4 with G ~ f(0) s^5 / 5
        return p0_ - integrate_panels([&](double s) { return s > 0 ? integrand(s) : 0.0; },
                                      0.0, r, 2, QuadRule::GaussLegendre);
    }
    const auto it = std::upper_bound(lr_.begin(), lr_.end(), r);
    const std::size_t j = std::size_t(it - lr_.begin()) - 1;
    return lp_[j] - integrate_panels(integrand, lr_[j], r, 2, QuadRule::GaussLegendre);
}

double NewtonianPotential::dvalue(double r) const {
    if (r <= 0.0) return 0.0;
    if (r >= r_hi_)
        return -(std::pow(r, -1.0 - a_) / (3.0 - a_) + B_moment_ * std::pow(r, -4.0));
    return -moment_at(r) / std::pow(r, 4.0);
}

double NewtonianPotential::residual(double r) const {
    auto pf = [this](double s) { return value(s); };
    const double lap = fd_radial_laplacian(pf, r, 0, 1e-3);
    return -lap - 1.0 / (1.0 + std::pow(r, 2.0 + a_));
}

// ---- barrier ---------------------------------------------------------------------

namespace {

// -g_hat(s, t) = -( mu0^{-2} f(y) + 4/(T-t) y p'(y) ), y = s/mu0
double neg_ghat(const NewtonianPotential& pot, double s, double T, double t) {
    const double d = T - t;
    const double mu0 = d * d;
    const double y = s / mu0;
    const double f = 1.0 / (1.0 + std::pow(y, 2.0 + pot.a()));
    return -(f / (mu0 * mu0) + 4.0 / d * y * pot.dvalue(y));
}

std::vector<double> log_samples(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
    return v;
}

} // namespace

double barrier_value(const NewtonianPotential& pot, const BarrierSpec& b, double s, double t) {
    const double mu0 = (b.T - t) * (b.T - t);
    const double alpha = 1.5 * b.a;
    const double psi2 = t + b.c / alpha * (std::pow(b.T, alpha) - std::pow(b.T - t, alpha));
    return 2.0 * pot.value(s / mu0) + psi2;
}

double barrier_margin_at(const NewtonianPotential& pot, const BarrierSpec& b, double s,
                         double t) {
    const double d = b.T - t;
    const double mu0 = d * d;
    const double y = s / mu0;
    const double f = 1.0 / (1.0 + std::pow(y, 2.0 + pot.a()));
    // dt psi_bar - Lap psi_bar - (mu0^{-2} f + 1)
    //   = mu0^{-2} f + 4/d * y p'(y) + c d^{3a/2 - 1}
    return f / (mu0 * mu0) + 4.0 / d * y * pot.dvalue(y) +
           b.c * std::pow(d, 1.5 * b.a - 1.0);
}

BarrierSpec tune_barrier(const NewtonianPotential& pot, double T, double eps,
                         double domain_radius) {
    BarrierSpec b;
    b.a = pot.a();
    b.T = T;

    // sample times geometrically in T-t and radii logarithmically
    const auto ts = log_samples(eps, T, 160);        // values of T-t
    const auto ss = log_samples(1e-14, domain_radius, 340);

    // gamma_sep: smallest gamma with  -g_hat <= 0 whenever s <= gamma sqrt(T-t)
    double gsep = 0.0;
    for (double d : ts) {
        const double t = T - d;
        // find the largest s with -g_hat > 0 below it: scan then bisect
        double bad = 0.0;
        for (double s : ss) {
            if (s > domain_radius) break;
            if (neg_ghat(pot, s, T, t) > 0.0 && s < 0.9 * domain_radius) {
                // -g_hat > 0 at s: inside-claim must exclude it
            } else {
                continue;
            }
            bad = std::max(bad, 0.0);
            // refine the lower boundary of the positive region
            double lo = 1e-16, hi = s;
            for (int it = 0; it < 60; ++it) {
                const double mid = std::sqrt(lo * hi);
                if (neg_ghat(pot, mid, T, t) > 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            gsep = std::max(gsep, hi / std::sqrt(d));
            break; // first (smallest) positive sample bounds the claim
        }
    }
    b.gamma_sep = gsep;

    // c: bisection on the global minimum margin
    auto min_margin = [&](double c) {
        BarrierSpec trial = b;
        trial.c = c;
        double mn = 1e300, as = 0, at = 0;
        for (double d : ts) {
            const double t = T - d;
            for (double s : ss) {
                const double m = barrier_margin_at(pot, trial, s, t);
                if (m < mn) { mn = m; as = s; at = t; }
            }
        }
        b.margin_arg_s = as;
        b.margin_arg_t = at;
        return mn;
    };
    double c_lo = 0.0, c_hi = 1.0;
    while (min_margin(c_hi) < 0.0 && c_hi < 1e8) c_hi *= 2.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (c_lo + c_hi);
        if (min_margin(mid) >= 0.0)
            c_hi = mid;
        else
            c_lo = mid;
    }
    b.c = c_hi * 1.05; // small headroom above the bisected threshold
    b.min_margin = min_margin(b.c);

    // ceiling constant of the supersolution against the solution weight
    double C = 0.0;
    for (double d : ts) {
        const double t = T - d;
        const double mu0 = d * d;
        for (double s : ss) {
            const double y = s / mu0;
            const double wt = 1.0 / (1.0 + std::pow(y, b.a)) + std::pow(T, 1.5 * b.a);
            C = std::max(C, barrier_value(pot, b, s, t) / wt);
        }
    }
    b.ceiling_C = C;
    return b;
}

// ---- norms -----------------------------------------------------------------------

double norm_outer_source(const ModeField& g, double a) {
    const auto& r = g.grid->r();
    double best = 0.0;
    for (std::size_t k = 0; k < g.knots(); ++k) {
        const double d = g.times->Tmt[k];
        const double mu0 = d * d;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double y = r[i] / mu0;
            const double wt = (1.0 / (1.0 + std::pow(y, 2.0 + a))) / (mu0 * mu0) + 1.0;
            best = std::max(best, g.abs_max_at(k, i) / wt);
        }
    }
    return best;
}

double norm_outer_solution(const ModeField& psi, double a) {
    const auto& r = psi.grid->r();
    const double T = psi.times->T;
    double best = 0.0;
    for (std::size_t k = 0; k < psi.knots(); ++k) {
        const double mu0 = psi.times->Tmt[k] * psi.times->Tmt[k];
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double y = r[i] / mu0;
            const double wt = 1.0 / (1.0 + std::pow(y, a)) + std::pow(T, 1.5 * a);
            best = std::max(best, psi.abs_max_at(k, i) / wt);
        }
    }
    return best;
}

// ---- background / solver ------------------------------------------------------------

std::function<double(double)> default_background(double amplitude, double plateau) {
    return [amplitude, plateau](double s) { return -amplitude * eta0(s / plateau); };
}

Background evolve_background(const std::function<double(double)>& Zstar0,
                             const RadialGrid& grid, const TimeGrid& tg, Scheme scheme) {
    RadialOperator op(grid, 0, {});
    HeatStepper st(op, scheme);
    const std::size_t n = grid.size();
    std::vector<double> f0(n);
    for (std::size_t i = 0; i < n; ++i) f0[i] = Zstar0(grid.r()[i]);
    f0.back() = 0.0;
    std::vector<double> zero(n, 0.0);
    auto snaps = st.march(f0, tg.t, [&](std::size_t) { return zero; },
                          [](std::size_t) { return 1.0; });
    Background bg;
    bg.field = ModeField(grid, tg);
    bg.field.m0 = std::move(snaps);
    bg.Zq.resize(tg.size());
    bg.Zq0 = Zstar0(0.0);
    double prev_sup = 0.0;
    for (std::size_t k = 0; k < tg.size(); ++k) {
        bg.Zq[k] = bg.field.m0[k][0];
        double sup = 0.0;
        for (double v : bg.field.m0[k]) sup = std::max(sup, std::abs(v));
        if (k == 0) {
            bg.sup0 = sup;
        } else if (sup > prev_sup * (1.0 + 1e-12)) {
            bg.max_principle_ok = false;
        }
        prev_sup = sup;
    }
    return bg;
}

OuterField solve_outer(const ModeField& g, double a, Scheme scheme) {
    const RadialGrid& grid = *g.grid;
    const TimeGrid& tg = *g.times;
    RadialOperator op0(grid, 0, {});
    HeatStepper st0(op0, scheme);
    const std::size_t n = grid.size();
    std::vector<double> f0(n, 0.0);

    OuterField out;
    out.psi = ModeField(grid, tg, g.has_mode1);
    out.psi.m0 = st0.march(f0, tg.t, [&](std::size_t k) { return g.m0[k]; },
                           [](std::size_t) { return 1.0; });
    if (g.has_mode1) {
        RadialOperator op1(grid, 1, {});
        HeatStepper st1(op1, scheme);
        for (int j = 0; j < 5; ++j)
            out.psi.m1[j] = st1.march(f0, tg.t, [&](std::size_t k) { return g.m1[j][k]; },
                                      [](std::size_t) { return 1.0; });
    }
    out.norm_source = norm_outer_source(g, a);
    out.norm_solution = norm_outer_solution(out.psi, a);
    out.ratio = out.norm_solution / std::max(out.norm_source, 1e-300);
    return out;
}

double holder_diagnostic(const ModeField& psi, double T_prime, double alpha, unsigned seed,
                         int pairs) {
    const auto& r = psi.grid->r();
    const auto& t = psi.times->t;
    std::size_t kmax = 0;
    while (kmax + 1 < t.size() && t[kmax + 1] <= T_prime) ++kmax;
    if (kmax < 1) return 0.0;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_k(0, kmax), pick_i(0, r.size() - 1);
    double best = 0.0;
    for (int m = 0; m < pairs; ++m) {
        const std::size_t k1 = pick_k(rng), k2 = pick_k(rng);
        const std::size_t i1 = pick_i(rng), i2 = pick_i(rng);
        if (k1 == k2 && i1 == i2) continue;
        const double num = std::abs(psi.m0[k1][i1] - psi.m0[k2][i2]);
        const double den = std::pow(std::abs(r[i1] - r[i2]), alpha) +
                           std::pow(std::abs(t[k1] - t[k2]), 0.5 * alpha);
        if (den > 0) best = std::max(best, num / den);
    }
    return best;
}

RadialGrid make_outer_grid(double s_min, double domain_radius, int per_decade) {
    return RadialGrid::log_map(s_min, domain_radius, per_decade);
}

} // namespace blowup
