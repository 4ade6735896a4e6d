#include "blowup/inner.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "blowup/constants.hpp"
#include "blowup/profile.hpp"

namespace blowup {

void WeightSpec::validate() const {
    if (!(a > 0.0) || !(a < 1.0)) throw std::invalid_argument("WeightSpec: need 0 < a < 1");
    if (!(R >= 10.0)) throw std::invalid_argument("WeightSpec: need R >= 10");
    if (!(nu > 0.0)) throw std::invalid_argument("WeightSpec: need nu > 0");
}

namespace {

double mu0_pow(const TimeGrid& tg, std::size_t k, double nu) {
    const double d = tg.Tmt[k];
    return std::pow(d * d, nu);
}

} // namespace

double norm_source(const ModeField& h, const WeightSpec& w) {
    const auto& r = h.grid->r();
    double best = 0.0;
    for (std::size_t k = 0; k < h.knots(); ++k) {
        const double m = mu0_pow(*h.times, k, w.nu);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double wt = (1.0 + std::pow(r[i], 2.0 + w.a)) / m;
            best = std::max(best, h.abs_max_at(k, i) * wt);
        }
    }
    return best;
}

double norm_solution(const ModeField& phi, const WeightSpec& w) {
    const auto& r = phi.grid->r();
    const double Rfac = std::pow(w.R, 6.0 - w.a);
    double best = 0.0;
    for (std::size_t k = 0; k < phi.knots(); ++k) {
        const double m = mu0_pow(*phi.times, k, w.nu) * Rfac;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double wt = (1.0 + std::pow(r[i], 6.0)) / m;
            best = std::max(best, phi.abs_max_at(k, i) * wt);
        }
    }
    return best;
}

double norm_solution_gradient(const ModeField& phi, const WeightSpec& w) {
    const RadialGrid& g = *phi.grid;
    const auto& r = g.r();
    const double Rfac = std::pow(w.R, 6.0 - w.a);
    double best = 0.0;
    for (std::size_t k = 0; k < phi.knots(); ++k) {
        const double m = mu0_pow(*phi.times, k, w.nu) * Rfac;
        const auto d0 = g.derivative_nodes(phi.m0[k]);
        std::array<std::vector<double>, 5> d1;
        if (phi.has_mode1)
            for (int j = 0; j < 5; ++j) d1[j] = g.derivative_nodes(phi.m1[j][k]);
        for (std::size_t i = 0; i < r.size(); ++i) {
            double grad = std::abs(d0[i]);
            if (phi.has_mode1) {
                double s = 0.0;
                for (int j = 0; j < 5; ++j) {
                    const double ang = (r[i] > 0) ? phi.m1[j][k][i] / r[i] : d1[j][i];
                    s += d1[j][i] * d1[j][i] + ang * ang;
                }
                grad += std::sqrt(s);
            }
            const double wt = (1.0 + r[i]) * (1.0 + std::pow(r[i], 6.0)) / m;
            best = std::max(best, grad * wt);
        }
    }
    return best;
}

std::array<std::vector<double>, 6> project_off_kernel(ModeField& h, const KernelTable& kt) {
    std::array<std::vector<double>, 6> coeffs;
    const std::size_t K = h.knots();
    for (auto& c : coeffs) c.assign(K, 0.0);
    const std::size_t n = h.nodes();
    for (std::size_t k = 0; k < K; ++k) {
        const double c6 = c_projection(kt, h, k, 6);
        coeffs[5][k] = c6;
        for (std::size_t i = 0; i < n; ++i) h.m0[k][i] -= c6 * kt.z6[i];
        if (h.has_mode1) {
            for (int j = 1; j <= 5; ++j) {
                const double cj = c_projection(kt, h, k, j);
                coeffs[std::size_t(j - 1)][k] = cj;
                for (std::size_t i = 0; i < n; ++i)
                    h.m1[std::size_t(j - 1)][k][i] -= cj * kt.z1[i];
            }
        }
    }
    return coeffs;
}

InnerSolution solve_inner(const ModeField& h_bar, double ell,
                          const std::vector<double>& z0_nodes, const BubbleTrajectory& traj,
                          const WeightSpec& w, const InnerOptions& opts) {
    w.validate();
    const RadialGrid& g = *h_bar.grid;
    const TimeGrid& tg = *h_bar.times;
    const std::size_t n = g.size();
    const std::size_t K = tg.size();
    if (z0_nodes.size() != n) throw std::invalid_argument("solve_inner: z0 node mismatch");

    KernelTable kt(g, 0.5 * g.r_max());
    RadialOperator op0(g, 0, [](double r) { return bubble_pUpm1(r); });

    InnerSolution out;
    out.ell = ell;
    out.phi = ModeField(g, tg, h_bar.has_mode1);

    // time axis: physical t with coefficient mu^2, or tau with unit coefficient
    std::vector<double> axis(K);
    std::vector<double> coeff(K);
    if (opts.rescaled_time) {
        axis = traj.tau_table();
        for (std::size_t k = 0; k < K; ++k) coeff[k] = 1.0;
    } else {
        axis = tg.t;
        for (std::size_t k = 0; k < K; ++k) {
            const double m = traj.mu(k);
            coeff[k] = m * m;
        }
    }

    double drift = 0.0;
    auto l2_norm = [&](const std::vector<double>& f) {
        std::vector<double> tmp(n);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = f[i] * f[i];
        return std::sqrt(omega4() * g.integrate_nodes(tmp));
    };

    // mode 0
    {
        std::vector<double> f0(n);
        for (std::size_t i = 0; i < n; ++i) f0[i] = ell * z0_nodes[i];
        HeatStepper st(op0, opts.scheme);
        std::vector<double> tmp(n);
        auto on_step = [&](std::vector<double>& f, std::size_t) {
            if (!opts.reproject) return;
            for (std::size_t i = 0; i < n; ++i) tmp[i] = f[i] * kt.z6[i];
            const double c6 = omega4() * g.integrate_nodes(tmp) / kt.I6;
            for (std::size_t i = 0; i < n; ++i) f[i] -= c6 * kt.z6[i];
            for (std::size_t i = 0; i < n; ++i) tmp[i] = f[i] * kt.z6[i];
            const double resid = std::abs(omega4() * g.integrate_nodes(tmp));
            const double nrm = l2_norm(f);
            if (nrm > 0) drift = std::max(drift, resid / (nrm * std::sqrt(kt.I6)));
        };
        out.phi.m0 = st.march(f0, axis, [&](std::size_t k) { return h_bar.m0[k]; },
                              [&](std::size_t k) { return coeff[k]; }, on_step);
    }
    // mode 1 (five components, same radial operator)
    if (h_bar.has_mode1) {
        RadialOperator op1(g, 1, [](double r) { return bubble_pUpm1(r); });
        HeatStepper st(op1, opts.scheme);
        std::vector<double> tmp(n);
        for (int j = 0; j < 5; ++j) {
            std::vector<double> f0(n, 0.0);
            auto on_step = [&](std::vector<double>& f, std::size_t) {
                if (!opts.reproject) return;
                for (std::size_t i = 0; i < n; ++i) tmp[i] = f[i] * kt.z1[i];
                const double cj = omega4_mode1() * g.integrate_nodes(tmp) / kt.I1;
                for (std::size_t i = 0; i < n; ++i) f[i] -= cj * kt.z1[i];
                for (std::size_t i = 0; i < n; ++i) tmp[i] = f[i] * kt.z1[i];
                const double resid = std::abs(omega4_mode1() * g.integrate_nodes(tmp));
                const double nrm = l2_norm(f);
                if (nrm > 0) drift = std::max(drift, resid / (nrm * std::sqrt(kt.I1)));
            };
            out.phi.m1[j] = st.march(f0, axis, [&](std::size_t k) { return h_bar.m1[j][k]; },
                                     [&](std::size_t k) { return coeff[k]; }, on_step);
        }
    }

    out.ortho_drift_max = drift;
    out.norm_h = norm_source(h_bar, w);
    out.norm_phi = norm_solution(out.phi, w);
    out.norm_grad = norm_solution_gradient(out.phi, w);
    const double denom = std::max(out.norm_h, 1e-300);
    out.ratio = (std::abs(out.ell) + out.norm_phi + out.norm_grad) / denom;
    out.blowup_flag = (out.norm_phi > opts.blowup_guard * std::max(out.norm_h, 1e-300));
    return out;
}

std::vector<ModeField> tin_sample_sources(const RadialGrid& grid, const TimeGrid& tg,
                                          const WeightSpec& w, unsigned seed) {
    const auto& r = grid.r();
    const std::size_t n = r.size();
    std::vector<ModeField> out;

    auto fill0 = [&](ModeField& f, const std::function<double(double, std::size_t)>& fn) {
        for (std::size_t k = 0; k < tg.size(); ++k)
            for (std::size_t i = 0; i < n; ++i) f.m0[k][i] = fn(r[i], k);
    };
    auto mu0nu = [&](std::size_t k) { return std::pow(tg.Tmt[k] * tg.Tmt[k], w.nu); };

    { // definition-saturating profile
        ModeField f(grid, tg);
        fill0(f, [&](double rr, std::size_t k) {
            return mu0nu(k) / (1.0 + std::pow(rr, 2.0 + w.a));
        });
        out.push_back(std::move(f));
    }
    { // smoother core, same tail class, mild time modulation
        ModeField f(grid, tg);
        fill0(f, [&](double rr, std::size_t k) {
            const double s = 1.0 + 0.5 * std::sin(6.0 * tg.t[k] / tg.T);
            return mu0nu(k) * s * std::pow(1.0 + rr * rr, -0.5 * (2.0 + w.a));
        });
        out.push_back(std::move(f));
    }
    { // degree-1 source
        ModeField f(grid, tg, true);
        for (std::size_t k = 0; k < tg.size(); ++k)
            for (std::size_t i = 0; i < n; ++i)
                f.m1[0][k][i] = mu0nu(k) * r[i] / std::pow(1.0 + r[i], 3.0 + w.a);
        out.push_back(std::move(f));
    }
    { // seeded random mixture of decaying shapes
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        const double c1 = U(rng), c2 = U(rng), c3 = U(rng);
        ModeField f(grid, tg);
        fill0(f, [&](double rr, std::size_t k) {
            const double b1 = 1.0 / (1.0 + std::pow(rr, 2.0 + w.a));
            const double b2 = std::pow(1.0 + rr * rr, -1.5);
            const double b3 = rr * rr / std::pow(1.0 + rr, 4.0 + w.a);
            return mu0nu(k) * (c1 * b1 + c2 * b2 + c3 * b3);
        });
        out.push_back(std::move(f));
    }
    return out;
}

TinMeasurement measure_Tin_constant(const WeightSpec& w, double T, double eps_factor,
                                    double Zq_abs, double beta,
                                    const std::function<double(double)>& z0_eval,
                                    int grid_nodes, unsigned seed, const InnerOptions& opts) {
    w.validate();
    auto grid = RadialGrid::tan_map(grid_nodes, 10.0, 2.0 * w.R);
    auto tg = TimeGrid::geometric(T, eps_factor * T, 0.94);
    auto traj = BubbleTrajectory::leading(tg, Zq_abs, beta);
    KernelTable kt(grid, w.R);
    std::vector<double> z0n(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) z0n[i] = z0_eval(grid.r()[i]);

    TinMeasurement m;
    for (auto& h : tin_sample_sources(grid, tg, w, seed)) {
        project_off_kernel(h, kt);
        const double ell = ell_functional(h, z0n, traj);
        auto sol = solve_inner(h, ell, z0n, traj, w, opts);
        m.per_sample.push_back(sol.ratio);
        m.C = std::max(m.C, sol.ratio);
    }
    return m;
}

} // namespace blowup
