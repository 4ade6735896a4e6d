#include "blowup/gluing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "blowup/constants.hpp"
#include "blowup/quadrature.hpp"
#include <string>

namespace blowup {

namespace {

constexpr double kP = 7.0 / 3.0;

double interp_radial(const RadialGrid& g, const std::vector<double>& f, double s) {
    const auto& r = g.r();
    if (s <= r.front()) return f.front();
    if (s >= r.back()) return f.back();
    auto it = std::upper_bound(r.begin(), r.end(), s);
    const std::size_t i = std::size_t(it - r.begin()) - 1;
    const double t = (s - r[i]) / (r[i + 1] - r[i]);
    return (1.0 - t) * f[i] + t * f[i + 1];
}

std::vector<double> lap_nodes(const RadialGrid& g, const std::vector<double>& f, int ell) {
    // f'' + (4/r) f' - ell(ell+3)/r^2 f on the nodes (3-point stencils)
    const auto& r = g.r();
    const std::size_t n = r.size();
    auto d1 = g.derivative_nodes(f);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = r[i] - r[i - 1], h1 = r[i + 1] - r[i];
        const double d2 = 2.0 * (f[i - 1] * h1 - f[i] * (h0 + h1) + f[i + 1] * h0) /
                          (h0 * h1 * (h0 + h1));
        out[i] = d2 + 4.0 / r[i] * d1[i] - double(ell * (ell + 3)) / (r[i] * r[i]) * f[i];
    }
    if (ell == 0 && n >= 3) {
        const double h0 = r[1] - r[0], h1 = r[2] - r[1];
        const double d2 = 2.0 * (f[0] * h1 - f[1] * (h0 + h1) + f[2] * h0) /
                          (h0 * h1 * (h0 + h1));
        out[0] = 5.0 * d2; // radial regular limit
    }
    out[n - 1] = out[n - 2];
    return out;
}

} // namespace

void GluingConfig::validate() const {
    if (k_bubbles != 1)
        throw std::invalid_argument("GluingConfig: only k = 1 is supported");
    if (!(T > 0) || !(eps_factor > 0) || eps_factor >= 1.0)
        throw std::invalid_argument("GluingConfig: bad T or eps");
    if (!(damping > 0) || damping > 1.0)
        throw std::invalid_argument("GluingConfig: damping must be in (0, 1]");
    if (!(Zstar_amp > 0)) throw std::invalid_argument("GluingConfig: Zstar_amp must be > 0");
    weights().validate();
}

double error_E(const Point5& y, const BubbleParams& params) {
    const double r = norm5(y);
    const double dil = kernel_profile_dilation(r); // (3/2)U + y.grad U
    double e = params.mu * params.mu_dot * dil;
    if (r > 0) {
        const double up = bubble_radial_dr(r);
        double dot = 0.0;
        for (int i = 0; i < 5; ++i) dot += params.xi_dot[i] * y[i];
        e += params.mu * up * dot / r;
    }
    return e;
}

double nonlinearity_N(double Z, double U_val) {
    // For |Z| << U the three terms cancel to O(Z^2/U^2) relative size, far
    // below double roundoff of U^p near the bubble core; switch to the
    // binomial series of (1+z)^p - 1 - p z there.
    const double z = Z / U_val;
    if (std::abs(z) < 0.5) {
        double term = kP * (kP - 1.0) / 2.0 * z * z; // k = 2
        double sum = term;
        for (int k = 3; k <= 60; ++k) {
            term *= (kP - double(k - 1)) / double(k) * z;
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return std::pow(U_val, kP) * sum;
    }
    return signed_pow(U_val + Z, kP) - std::pow(U_val, kP) -
           kP * std::pow(U_val, kP - 1.0) * Z;
}

// ---- init ---------------------------------------------------------------------

GluingState init_gluing(const GluingConfig& cfg) {
    cfg.validate();
    GluingState st;
    st.cfg = cfg;
    const double eps = cfg.eps_factor * cfg.T;
    st.times = std::make_unique<TimeGrid>(TimeGrid::geometric(cfg.T, eps, cfg.time_shrink));
    st.inner_grid = std::make_unique<RadialGrid>(
        RadialGrid::tan_map(cfg.inner_nodes, 10.0, 2.0 * cfg.R));

    auto qgrid = RadialGrid::tan_map_halfline(400, 10.0);
    st.integrals = compute_core_integrals(qgrid);
    st.eig = solve_eigenpair();
    st.integrals.I_Z0sq = st.eig.I_Z0sq;
    st.beta = beta_n(st.integrals);
    st.gamma = gamma_constant(cfg.Zstar_amp, st.beta);
    st.Zq0 = -cfg.Zstar_amp;
    st.alpha_star = alpha_star_const(cfg.Zstar_amp, st.beta);

    const double mu_end = st.alpha_star * eps * eps;
    const double s_min = std::max(1e-15, 0.05 * cfg.R * mu_end);
    st.outer_grid = std::make_unique<RadialGrid>(
        make_outer_grid(s_min, 1.0, cfg.outer_per_decade));

    st.bg = evolve_background(default_background(cfg.Zstar_amp), *st.outer_grid, *st.times);
    st.traj = BubbleTrajectory::leading(*st.times, cfg.Zstar_amp, st.beta);
    st.F_eff.assign(st.times->size(), 2.0 * std::sqrt(st.alpha_star));
    for (auto& g : st.g1_eff) g.assign(st.times->size(), 0.0);

    st.phi = ModeField(*st.inner_grid, *st.times, cfg.with_mode1);
    st.psi = ModeField(*st.outer_grid, *st.times, cfg.with_mode1);
    st.z0_nodes.resize(st.inner_grid->size());
    for (std::size_t i = 0; i < st.z0_nodes.size(); ++i)
        st.z0_nodes[i] = st.eig.z0_at(st.inner_grid->r()[i]);
    return st;
}

// ---- assembly -------------------------------------------------------------------

ModeField assemble_H_source(const GluingState& st) {
    const RadialGrid& gi = *st.inner_grid;
    const RadialGrid& go = *st.outer_grid;
    const TimeGrid& tg = *st.times;
    const double lam = st.cfg.lambda;
    ModeField H(gi, tg, st.cfg.with_mode1);
    const auto& r = gi.r();
    const std::size_t n = r.size();
    std::vector<double> W(go.size());
    for (std::size_t k = 0; k < tg.size(); ++k) {
        const double mu = st.traj.mu(k);
        const double mu32 = std::pow(mu, 1.5);
        for (std::size_t j = 0; j < go.size(); ++j)
            W[j] = st.bg.field.m0[k][j] + st.psi.m0[k][j];
        for (std::size_t i = 0; i < n; ++i) {
            const double Wval = interp_radial(go, W, mu * r[i]);
            const double val = st.Zq0 + lam * (Wval - st.Zq0);
            H.m0[k][i] = mu32 * bubble_pUpm1(r[i]) * val;
        }
        if (st.cfg.with_mode1) {
            auto D = go.derivative_nodes(W);
            for (int j = 0; j < 5; ++j) {
                const double xj = st.traj.xi1[j][k];
                std::vector<double> psi1j(go.size(), 0.0);
                if (st.psi.has_mode1) psi1j = st.psi.m1[j][k];
                for (std::size_t i = 0; i < n; ++i) {
                    const double Dv = interp_radial(go, D, mu * r[i]);
                    const double p1 = interp_radial(go, psi1j, mu * r[i]);
                    H.m1[j][k][i] = lam * mu32 * bubble_pUpm1(r[i]) * (Dv * xj + p1);
                }
            }
        }
    }
    return H;
}

ModeField assemble_H(const GluingState& st) {
    ModeField H = assemble_H_source(st);
    const auto& r = st.inner_grid->r();
    for (std::size_t k = 0; k < st.times->size(); ++k) {
        const double mmd = st.traj.mu(k) * st.traj.mu_dot(k);
        for (std::size_t i = 0; i < r.size(); ++i)
            H.m0[k][i] += mmd * kernel_profile_dilation(r[i]);
        if (st.cfg.with_mode1) {
            for (int j = 0; j < 5; ++j) {
                const double mxd = st.traj.mu(k) * st.traj.xi1_dot[j][k];
                if (mxd == 0.0) continue;
                for (std::size_t i = 0; i < r.size(); ++i)
                    H.m1[j][k][i] += mxd * kernel_profile_translation(r[i]);
            }
        }
    }
    return H;
}

ModeField assemble_G(const GluingState& st, GTermNorms& terms) {
    const RadialGrid& go = *st.outer_grid;
    const RadialGrid& gi = *st.inner_grid;
    const TimeGrid& tg = *st.times;
    const double R = st.cfg.R;
    const double a = st.cfg.a;
    ModeField G(go, tg, st.cfg.with_mode1);
    terms = GTermNorms{};
    const auto& s = go.r();

    for (std::size_t k = 0; k < tg.size(); ++k) {
        const double mu = st.traj.mu(k);
        const double mud = st.traj.mu_dot(k);
        const double d = tg.Tmt[k];
        const double mu0sq = d * d * d * d; // mu0^2
        auto dphi = gi.derivative_nodes(st.phi.m0[k]);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double y = s[i] / mu;
            const double eta = cutoff_eta(y, R);
            const double etad = cutoff_eta_dr(y, R);
            const double etal = cutoff_eta_lap(y, R);
            const double W = st.bg.field.m0[k][i] + st.psi.m0[k][i];
            double phiv = 0.0, phid = 0.0;
            if (y <= 2.0 * R) {
                phiv = interp_radial(gi, st.phi.m0[k], y);
                phid = interp_radial(gi, dphi, y);
            }
            const double g1 = (1.0 - eta) * bubble_pUpm1(y) / (mu * mu) * W;
            const double A = std::pow(mu, -3.5) * (etal * phiv + 2.0 * etad * phid);
            const double B = std::pow(mu, -2.5) * mud *
                             ((y * phid + 1.5 * phiv) * eta + y * etad * phiv);
            const double g2 = std::pow(mu, -2.5) * mud * kernel_profile_dilation(y) *
                              (1.0 - eta);
            const double U_val = std::pow(mu, -1.5) * bubble_radial(y);
            const double phit = std::pow(mu, -1.5) * phiv * eta;
            const double Nv = nonlinearity_N(W + phit, U_val);
            G.m0[k][i] = g1 + A + B + g2 + Nv;

            const double K1w = (1.0 / (1.0 + std::pow(s[i] / (d * d), 2.0 + a))) / mu0sq + 1.0;
            terms.g1 = std::max(terms.g1, std::abs(g1) / K1w);
            terms.g2 = std::max(terms.g2, std::abs(g2) / K1w);
            terms.A = std::max(terms.A, std::abs(A) / K1w);
            terms.B = std::max(terms.B, std::abs(B) / K1w);
            terms.N = std::max(terms.N, std::abs(Nv) / K1w);
            terms.total = std::max(terms.total, std::abs(G.m0[k][i]) / K1w);
        }
        if (st.cfg.with_mode1 && st.psi.has_mode1) {
            for (int j = 0; j < 5; ++j) {
                for (std::size_t i = 0; i < s.size(); ++i) {
                    const double y = s[i] / mu;
                    const double eta = cutoff_eta(y, R);
                    const double W1 = st.psi.m1[j][k][i];
                    double p1v = 0.0;
                    if (st.phi.has_mode1 && y <= 2.0 * R)
                        p1v = interp_radial(gi, st.phi.m1[j][k], y);
                    // linearized degree-1 pieces: coupling term plus the
                    // nonlinearity differential around the radial state
                    const double W0 = st.bg.field.m0[k][i] + st.psi.m0[k][i];
                    const double U_val = std::pow(mu, -1.5) * bubble_radial(y);
                    const double phit0 = std::pow(mu, -1.5) *
                                         ((y <= 2.0 * R) ? interp_radial(gi, st.phi.m0[k], y) : 0.0) * eta;
                    const double dN = signed_pow(U_val + W0 + phit0, kP - 1.0) * kP -
                                      kP * std::pow(U_val, kP - 1.0);
                    const double Z1 = W1 + std::pow(mu, -1.5) * p1v * eta;
                    G.m1[j][k][i] = (1.0 - eta) * bubble_pUpm1(y) / (mu * mu) * W1 + dN * Z1;
                }
            }
        }
    }
    return G;
}

// ---- picard ----------------------------------------------------------------------

namespace {

double sup_abs_diff(const ModeField& A, const ModeField& B) {
    double m = 0.0;
    for (std::size_t k = 0; k < A.knots(); ++k)
        for (std::size_t i = 0; i < A.nodes(); ++i)
            m = std::max(m, std::abs(A.m0[k][i] - B.m0[k][i]));
    return m;
}

void blend(ModeField& into, const ModeField& cand, double dmp) {
    for (std::size_t k = 0; k < into.knots(); ++k)
        for (std::size_t i = 0; i < into.nodes(); ++i)
            into.m0[k][i] = (1.0 - dmp) * into.m0[k][i] + dmp * cand.m0[k][i];
    if (into.has_mode1 && cand.has_mode1)
        for (int j = 0; j < 5; ++j)
            for (std::size_t k = 0; k < into.knots(); ++k)
                for (std::size_t i = 0; i < into.nodes(); ++i)
                    into.m1[j][k][i] =
                        (1.0 - dmp) * into.m1[j][k][i] + dmp * cand.m1[j][k][i];
}

} // namespace

IterStats picard_step(GluingState& st) {
    const GluingConfig& cfg = st.cfg;
    const TimeGrid& tg = *st.times;
    const std::size_t K = tg.size();
    const WeightSpec w = cfg.weights();
    KernelTable kt(*st.inner_grid, cfg.R);
    IterStats stats;
    stats.iter = int(st.log.size()) + 1;

    // 1) outer update: psi <- (1-d) psi + d T_out[lambda G]
    {
        GTermNorms terms;
        ModeField G = assemble_G(st, terms);
        st.g_terms = terms;
        if (cfg.lambda != 1.0) {
            for (auto& row : G.m0)
                for (auto& v : row) v *= cfg.lambda;
            if (G.has_mode1)
                for (auto& comp : G.m1)
                    for (auto& row : comp)
                        for (auto& v : row) v *= cfg.lambda;
        }
        OuterField of = solve_outer(G, cfg.a);
        stats.inc_psi = cfg.damping * sup_abs_diff(st.psi, of.psi);
        blend(st.psi, of.psi, cfg.damping);
    }

    // 2) parameter update from the projections of the E-free source
    ModeField Hsrc = assemble_H_source(st);
    std::vector<double> cNoE6(K);
    std::array<std::vector<double>, 5> cNoE1;
    for (auto& c : cNoE1) c.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        cNoE6[k] = c_projection(kt, Hsrc, k, 6) * kt.I6; // int Hsrc Z6 dy
        if (cfg.with_mode1)
            for (int j = 1; j <= 5; ++j)
                cNoE1[j - 1][k] = c_projection(kt, Hsrc, k, j); // coefficient
    }

    // dilation solvability: c6[H] = 0 is the scalar law mu' = -F(t) sqrt(mu),
    // solved exactly in the sqrt variable with terminal value mu_*(T-eps);
    // the damped drive F_eff makes the stored pair (mu, mu') satisfy the
    // projection identity pointwise at the fixed point
    std::vector<double> mu1_old = st.traj.mu1;
    {
        std::vector<double> F(K);
        for (std::size_t k = 0; k < K; ++k)
            F[k] = cNoE6[k] / (kt.I6 * std::pow(st.traj.mu(k), 1.5));
        if (!st.F_eff_init) {
            st.F_eff = F;
            st.F_eff_init = true;
        } else {
            for (std::size_t k = 0; k < K; ++k)
                st.F_eff[k] = (1.0 - cfg.damping) * st.F_eff[k] + cfg.damping * F[k];
        }
        // sqrt(mu)(t) = sqrt(mu_end) + (1/2) int_t^{T-eps} F_eff
        std::vector<double> VF(K, 0.0);
        for (std::size_t k = K - 1; k-- > 0;)
            VF[k] = VF[k + 1] +
                    0.5 * (st.F_eff[k] + st.F_eff[k + 1]) * (tg.t[k + 1] - tg.t[k]);
        const double sq_end = std::sqrt(st.traj.mu_star_v[K - 1]);
        for (std::size_t k = 0; k < K; ++k) {
            const double sq = sq_end + 0.5 * VF[k];
            st.traj.mu1[k] = sq * sq - st.traj.mu_star_v[k];
            st.traj.mu1_dot[k] = -st.F_eff[k] * sq - st.traj.mu_star_dot_v[k];
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        const double d = tg.Tmt[k];
        stats.inc_mu1 = std::max(stats.inc_mu1,
                                 std::abs(st.traj.mu1[k] - mu1_old[k]) / (d * d));
    }

    if (cfg.with_mode1) {
        for (int j = 0; j < 5; ++j) {
            std::vector<double> g1(K), W1(K);
            double inc = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double g1_new = cNoE1[j][k] / (st.traj.mu(k) * tg.Tmt[k]);
                g1[k] = (1.0 - cfg.damping) * st.g1_eff[j][k] + cfg.damping * g1_new;
            }
            W1[K - 1] = 0.0;
            for (std::size_t k = K - 1; k-- > 0;)
                W1[k] = W1[k + 1] + 0.5 * (tg.Tmt[k] * g1[k] + tg.Tmt[k + 1] * g1[k + 1]) *
                                        (tg.t[k + 1] - tg.t[k]);
            for (std::size_t k = 0; k < K; ++k) {
                const double d = tg.Tmt[k];
                inc = std::max(inc, std::abs(W1[k] - st.traj.xi1[j][k]) / (d * d));
                st.traj.xi1[j][k] = W1[k];
                st.traj.xi1_dot[j][k] = -d * g1[k];
            }
            st.g1_eff[j] = g1;
            stats.inc_xi1 = std::max(stats.inc_xi1, inc);
        }
    }

    // projection consistency of the full H with the new trajectory
    {
        double worst = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double eterm = st.traj.mu(k) * st.traj.mu_dot(k) * kt.I6;
            const double resid = std::abs(cNoE6[k] + eterm);
            const double scale = std::abs(cNoE6[k]) + std::abs(eterm) + 1e-300;
            worst = std::max(worst, resid / scale);
            if (cfg.with_mode1)
                for (int j = 0; j < 5; ++j) {
                    const double ej = st.traj.mu(k) * st.traj.xi1_dot[j][k];
                    const double rj = std::abs(cNoE1[j][k] + ej);
                    const double sj = std::abs(cNoE1[j][k]) + std::abs(ej) + 1e-300;
                    worst = std::max(worst, rj / sj);
                }
        }
        stats.c_resid_rel = worst;
    }

    // 3) inner update
    {
        ModeField H = Hsrc;
        const auto& r = st.inner_grid->r();
        for (std::size_t k = 0; k < K; ++k) {
            const double mmd = st.traj.mu(k) * st.traj.mu_dot(k);
            for (std::size_t i = 0; i < r.size(); ++i)
                H.m0[k][i] += mmd * kernel_profile_dilation(r[i]);
            if (cfg.with_mode1)
                for (int j = 0; j < 5; ++j) {
                    const double mxd = st.traj.mu(k) * st.traj.xi1_dot[j][k];
                    for (std::size_t i = 0; i < r.size(); ++i)
                        H.m1[j][k][i] += mxd * kernel_profile_translation(r[i]);
                }
        }
        project_off_kernel(H, kt);
        stats.norm_H = norm_source(H, w);
        st.ell = ell_functional(H, st.z0_nodes, st.traj);
        stats.ell = st.ell;
        auto sol = solve_inner(H, st.ell, st.z0_nodes, st.traj, w);
        // phi increment in the solution norm
        ModeField diff(*st.inner_grid, tg, false);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t i = 0; i < r.size(); ++i)
                diff.m0[k][i] = sol.phi.m0[k][i] - st.phi.m0[k][i];
        stats.inc_phi = cfg.damping * norm_solution(diff, w);
        blend(st.phi, sol.phi, cfg.damping);
    }

    // 4) norms, bounds, trust region
    {
        double psi_inf = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t i = 0; i < st.psi.nodes(); ++i)
                psi_inf = std::max(psi_inf, st.psi.abs_max_at(k, i));
        stats.norm_psi_inf = psi_inf;
        stats.norm_phi_star = norm_solution(st.phi, w);
        double mu1b = 0.0, xi1b = 0.0, deriv = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double d2 = tg.Tmt[k] * tg.Tmt[k];
            mu1b = std::max(mu1b, std::abs(st.traj.mu1[k]) / d2);
            xi1b = std::max(xi1b, st.traj.xi1_norm(k) / d2);
            double xd = 0.0;
            for (int j = 0; j < 5; ++j) xd += st.traj.xi1_dot[j][k] * st.traj.xi1_dot[j][k];
            deriv = std::max(deriv, std::abs(st.traj.mu1_dot[k]) + std::sqrt(xd));
        }
        stats.mu1_bound = mu1b;
        stats.xi1_bound = xi1b;
        st.norm_H_bound_const =
            stats.norm_H / std::max(psi_inf + st.bg.sup0, 1e-300);
        if (deriv > cfg.delta0 || stats.norm_phi_star + psi_inf > cfg.delta1) {
            st.trust_region_violation = true;
            st.abort_reason = "trust region exit: |mu1'|+|xi1'| = " + std::to_string(deriv) +
                              ", ||phi||*+||psi|| = " +
                              std::to_string(stats.norm_phi_star + psi_inf);
        }
    }

    stats.total_inc = stats.inc_psi + stats.inc_phi + stats.inc_mu1 + stats.inc_xi1;
    if (!st.log.empty() && st.log.back().total_inc > 0)
        stats.contraction = stats.total_inc / st.log.back().total_inc;
    st.log.push_back(stats);
    return stats;
}

GluingState run_gluing(const GluingConfig& cfg) {
    GluingState st = init_gluing(cfg);
    auto loop = [&](GluingState& s) {
        for (int it = 0; it < s.cfg.max_iters; ++it) {
            IterStats is = picard_step(s);
            if (s.trust_region_violation)
                throw ToleranceError("gluing: " + s.abort_reason);
            if (is.total_inc < s.cfg.tol * std::max(s.cfg.Zstar_amp, 1e-8)) {
                s.converged = true;
                return true;
            }
            if (it >= 4 && is.total_inc > 8.0 * s.log.front().total_inc) return false;
        }
        return s.converged;
    };
    bool ok = loop(st);
    if (!ok && cfg.homotopy_fallback && cfg.lambda == 1.0) {
        // continuation in the homotopy parameter, warm-started
        GluingState st2 = init_gluing(cfg);
        for (double lam : {0.25, 0.5, 0.75, 1.0}) {
            st2.cfg.lambda = lam;
            st2.converged = false;
            if (!loop(st2))
                throw ToleranceError("gluing: homotopy continuation failed at lambda");
        }
        return st2;
    }
    if (!ok) throw ToleranceError("gluing: Picard iteration did not converge");
    return st;
}

// ---- outputs ------------------------------------------------------------------------

namespace {
std::size_t knot_below(const TimeGrid& tg, double t) {
    std::size_t k = 0;
    while (k + 2 < tg.size() && tg.t[k + 1] <= t) ++k;
    return k;
}
} // namespace

double assemble_solution(const GluingState& st, const Point5& x, double t) {
    const TimeGrid& tg = *st.times;
    const std::size_t k0 = knot_below(tg, t);
    const std::size_t k1 = std::min(k0 + 1, tg.size() - 1);
    const double tt = (tg.t[k1] > tg.t[k0])
                          ? std::clamp((t - tg.t[k0]) / (tg.t[k1] - tg.t[k0]), 0.0, 1.0)
                          : 0.0;
    auto eval_knot = [&](std::size_t k) {
        const double mu = st.traj.mu(k);
        Point5 xc = x;
        for (int j = 0; j < 5; ++j) xc[j] -= st.traj.xi1[j][k];
        const double rb = norm5(xc) / mu;
        const double s = norm5(x);
        const double bub = std::pow(mu, -1.5) * bubble_radial(rb);
        const double W = interp_radial(*st.outer_grid, st.bg.field.m0[k], s) +
                         interp_radial(*st.outer_grid, st.psi.m0[k], s);
        double phiv = 0.0;
        if (rb <= 2.0 * st.cfg.R)
            phiv = std::pow(mu, -1.5) * interp_radial(*st.inner_grid, st.phi.m0[k], rb) *
                   cutoff_eta(rb, st.cfg.R);
        return bub + W + phiv;
    };
    return (1.0 - tt) * eval_knot(k0) + tt * eval_knot(k1);
}

std::vector<double> u_inf_series(const GluingState& st) {
    const TimeGrid& tg = *st.times;
    std::vector<double> out(tg.size(), 0.0);
    const auto& si = st.inner_grid->r();
    const auto& so = st.outer_grid->r();
    for (std::size_t k = 0; k < tg.size(); ++k) {
        const double mu = st.traj.mu(k);
        double best = 0.0;
        // center and inner region
        for (std::size_t i = 0; i < si.size(); i += 4) {
            const double y = si[i];
            const double u = std::pow(mu, -1.5) *
                                 (bubble_radial(y) + st.phi.m0[k][i] * cutoff_eta(y, st.cfg.R)) +
                             interp_radial(*st.outer_grid, st.bg.field.m0[k], mu * y) +
                             interp_radial(*st.outer_grid, st.psi.m0[k], mu * y);
            best = std::max(best, std::abs(u));
        }
        // outer region
        for (std::size_t i = 0; i < so.size(); i += 2) {
            const double y = so[i] / mu;
            double u = std::pow(mu, -1.5) * bubble_radial(y) + st.bg.field.m0[k][i] +
                       st.psi.m0[k][i];
            if (y <= 2.0 * st.cfg.R)
                u += std::pow(mu, -1.5) * interp_radial(*st.inner_grid, st.phi.m0[k], y) *
                     cutoff_eta(y, st.cfg.R);
            best = std::max(best, std::abs(u));
        }
        out[k] = best;
    }
    return out;
}

RateFit rate_fit(const TimeGrid& tg, const std::vector<double>& mu,
                 const std::vector<double>& uinf, double wlo_over_eps, double whi_frac) {
    RateFit rf;
    const double lo = wlo_over_eps * tg.eps, hi = whi_frac * tg.T;
    double sx = 0, sxx = 0, s1 = 0, syu = 0, sxyu = 0, sym = 0, sxym = 0;
    double dmin = 1e300, dmax = 0;
    for (std::size_t k = 0; k < tg.size(); ++k) {
        const double d = tg.Tmt[k];
        if (d < lo || d > hi) continue;
        const double x = std::log(d);
        s1 += 1;
        sx += x;
        sxx += x * x;
        sym += std::log(mu[k]);
        sxym += x * std::log(mu[k]);
        syu += std::log(uinf[k]);
        sxyu += x * std::log(uinf[k]);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    if (s1 < 8) throw std::invalid_argument("rate_fit: window covers too few knots");
    rf.decades = std::log10(dmax / dmin);
    if (rf.decades < 1.0)
        throw std::invalid_argument("rate_fit: less than one decade of T-t in the window");
    rf.mu_slope = (s1 * sxym - sx * sym) / (s1 * sxx - sx * sx);
    rf.p_inf_slope = (s1 * sxyu - sx * syu) / (s1 * sxx - sx * sx);
    // type II indicator on the final decade of knots
    rf.typeII = true;
    double prev = -1e300;
    for (std::size_t k = 0; k < tg.size(); ++k) {
        const double d = tg.Tmt[k];
        if (d > 10.0 * tg.eps) continue;
        const double v = std::pow(d, 0.75) * uinf[k];
        if (v <= prev) rf.typeII = false;
        prev = v;
    }
    return rf;
}

ResidualAudit residual_audit(const GluingState& st) {
    const TimeGrid& tg = *st.times;
    const RadialGrid& go = *st.outer_grid;
    const RadialGrid& gi = *st.inner_grid;
    const std::size_t K = tg.size();
    const auto& so = go.r();
    const auto& yi = gi.r();
    const double a = st.cfg.a, nu = st.cfg.nu, R = st.cfg.R;

    ResidualAudit out;

    // remainder field (everything except the bubble) and the bubble value;
    // kept separate so no term is recovered by subtracting near-equal numbers
    auto eval_rest = [&](std::size_t k, double s_abs) {
        const double mu = st.traj.mu(k);
        const double y = s_abs / mu;
        double rest = interp_radial(go, st.bg.field.m0[k], s_abs) +
                      interp_radial(go, st.psi.m0[k], s_abs);
        if (y <= 2.0 * R)
            rest += std::pow(mu, -1.5) * interp_radial(gi, st.phi.m0[k], y) *
                    cutoff_eta(y, R);
        return rest;
    };
    auto eval_u = [&](std::size_t k, double s_abs, bool with_fields) {
        const double mu = st.traj.mu(k);
        double u = std::pow(mu, -1.5) * bubble_radial(s_abs / mu);
        if (with_fields) u += eval_rest(k, s_abs);
        return u;
    };
    auto ut_fd = [&](std::size_t k, double s_abs, bool wf) {
        const double h0 = tg.t[k] - tg.t[k - 1], h1 = tg.t[k + 1] - tg.t[k];
        return (-h1 / (h0 * (h0 + h1))) * eval_u(k - 1, s_abs, wf) +
               ((h1 - h0) / (h0 * h1)) * eval_u(k, s_abs, wf) +
               (h0 / (h1 * (h0 + h1))) * eval_u(k + 1, s_abs, wf);
    };

    for (int mode = 0; mode < 2; ++mode) {
        const bool wf = (mode == 0);
        double inner_w = 0.0, outer_w = 0.0;
        for (std::size_t k = 2; k + 2 < K; k += 3) {
            const double mu = st.traj.mu(k);
            const double d = tg.Tmt[k];
            const double mu0nu = std::pow(d * d, nu);
            std::vector<double> lapW, lapPhi, dphi_k, Wk;
            if (wf) {
                Wk.resize(so.size());
                for (std::size_t i = 0; i < so.size(); ++i)
                    Wk[i] = st.bg.field.m0[k][i] + st.psi.m0[k][i];
                lapW = lap_nodes(go, Wk, 0);
                lapPhi = lap_nodes(gi, st.phi.m0[k], 0);
                dphi_k = gi.derivative_nodes(st.phi.m0[k]);
            }

            // inner region: sample at the inner grid's own nodes so the phi
            // pieces need no interpolation
            for (std::size_t i = 1; i + 1 < yi.size(); i += 2) {
                const double y = yi[i];
                if (y > R) break;
                const double s_abs = mu * y;
                const double ut = ut_fd(k, s_abs, wf);
                const double U_val = std::pow(mu, -1.5) * bubble_radial(y);
                double S = -ut;
                if (wf) {
                    const double rest = eval_rest(k, s_abs);
                    double lap = interp_radial(go, lapW, s_abs);
                    lap += std::pow(mu, -3.5) *
                           (lapPhi[i] * cutoff_eta(y, R) +
                            2.0 * dphi_k[i] * cutoff_eta_dr(y, R) +
                            st.phi.m0[k][i] * cutoff_eta_lap(y, R));
                    S += lap + bubble_pUpm1(y) / (mu * mu) * rest +
                         nonlinearity_N(rest, U_val);
                }
                // bare bubble reference: S = -B_t = mu^{-5/2} mu' z6 exactly
                const double Sref = std::pow(mu, -2.5) * st.traj.mu_dot(k) *
                                    kernel_profile_dilation(y);
                const double dev = wf ? S : (S - Sref);
                const double wgt = std::pow(mu, 3.5) * (1.0 + std::pow(y, 2.0 + a)) / mu0nu;
                inner_w = std::max(inner_w, std::abs(dev) * wgt);
            }

            // outer region: beyond the cutoff support, where phi does not enter
            for (std::size_t i = 1; i + 1 < so.size(); i += 2) {
                const double y = so[i] / mu;
                if (y <= 2.0 * R) continue;
                const double ut = ut_fd(k, so[i], wf);
                const double U_val = std::pow(mu, -1.5) * bubble_radial(y);
                double S = -ut;
                if (wf) {
                    const double rest = eval_rest(k, so[i]);
                    double lap = lapW[i];
                    if (y <= 2.0 * R) {
                        lap += std::pow(mu, -3.5) *
                               (interp_radial(gi, lapPhi, y) * cutoff_eta(y, R) +
                                2.0 * interp_radial(gi, dphi_k, y) * cutoff_eta_dr(y, R) +
                                interp_radial(gi, st.phi.m0[k], y) * cutoff_eta_lap(y, R));
                    }
                    S += lap + bubble_pUpm1(y) / (mu * mu) * rest +
                         nonlinearity_N(rest, U_val);
                }
                const double Sref = std::pow(mu, -2.5) * st.traj.mu_dot(k) *
                                    kernel_profile_dilation(y);
                const double dev = wf ? S : (S - Sref);
                const double mu0sq = d * d * d * d;
                const double K1w =
                    (1.0 / (1.0 + std::pow(so[i] / (d * d), 2.0 + a))) / mu0sq + 1.0;
                outer_w = std::max(outer_w, std::abs(dev) / K1w);
            }
        }
        if (wf) {
            out.inner_weighted = inner_w;
            out.outer_weighted = outer_w;
        } else {
            out.floor_inner = inner_w;
            out.floor_outer = outer_w;
        }
    }

    // the audit differentiates with operators that are deliberately not the
    // solver's; their measured disagreement on the fields themselves is the
    // honest floor for the residual
    {
        RadialOperator opi(gi, 0, [](double rr) { return bubble_pUpm1(rr); });
        RadialOperator opo(go, 0, {});
        const auto& Ki = opi.stiffness();
        const auto& Mi = opi.mass();
        const auto& Ko = opo.stiffness();
        const auto& Mo = opo.mass();
        auto fem_apply = [](const SymTridiag& Km, const std::vector<double>& Mm,
                            const std::vector<double>& x) {
            std::vector<double> out_v(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                double v = Km.d[i] * x[i];
                if (i > 0) v += Km.e[i - 1] * x[i - 1];
                if (i + 1 < x.size()) v += Km.e[i] * x[i + 1];
                out_v[i] = -v / Mm[i];
            }
            return out_v;
        };
        double fli = 0.0, flo = 0.0;
        for (std::size_t k = 2; k + 2 < K; k += 3) {
            const double mu = st.traj.mu(k);
            const double d = tg.Tmt[k];
            const double mu0nu = std::pow(d * d, nu);
            // inner: | (FD lap + pU^{p-1}) phi - FEM (lap + pU^{p-1}) phi |
            auto lapPhi = lap_nodes(gi, st.phi.m0[k], 0);
            auto femPhi = opi.to_profile(fem_apply(Ki, Mi, opi.from_profile(st.phi.m0[k])));
            for (std::size_t i = 1; i + 1 < yi.size(); i += 2) {
                const double y = yi[i];
                if (y > R) break;
                const double mm = (lapPhi[i] + bubble_pUpm1(y) * st.phi.m0[k][i]) - femPhi[i];
                const double wgt =
                    std::pow(mu, 3.5) * (1.0 + std::pow(y, 2.0 + a)) / mu0nu;
                fli = std::max(fli, std::abs(mm) * std::pow(mu, -3.5) * wgt);
            }
            // outer: same for W plus the time-scheme gap (BDF2 history vs the
            // centered difference the audit uses)
            std::vector<double> Wk(so.size());
            for (std::size_t i = 0; i < so.size(); ++i)
                Wk[i] = st.bg.field.m0[k][i] + st.psi.m0[k][i];
            auto lapWk = lap_nodes(go, Wk, 0);
            auto femW = opo.to_profile(fem_apply(Ko, Mo, opo.from_profile(Wk)));
            // BDF2 derivative at knot k spans (k-2, k-1, k); the audit's
            // centered difference spans (k-1, k, k+1)
            const double h0 = tg.t[k] - tg.t[k - 1], h1 = tg.t[k + 1] - tg.t[k];
            const double hm = tg.t[k - 1] - tg.t[k - 2];
            const double w_ = h0 / hm;
            const double b0 = (1.0 + 2.0 * w_) / (1.0 + w_) / h0;
            const double b1 = -(1.0 + w_) / h0;
            const double b2 = w_ * w_ / (1.0 + w_) / h0;
            for (std::size_t i = 1; i + 1 < so.size(); i += 2) {
                const double y = so[i] / mu;
                if (y <= 2.0 * R) continue;
                const double K1w =
                    (1.0 / (1.0 + std::pow(so[i] / (d * d), 2.0 + a))) / (d * d * d * d) + 1.0;
                double mm = std::abs(lapWk[i] - femW[i]);
                const double Wm2 = st.bg.field.m0[k - 2][i] + st.psi.m0[k - 2][i];
                const double Wm = st.bg.field.m0[k - 1][i] + st.psi.m0[k - 1][i];
                const double Wp = st.bg.field.m0[k + 1][i] + st.psi.m0[k + 1][i];
                const double d_bdf = b0 * Wk[i] + b1 * Wm + b2 * Wm2;
                const double d_cen = (-h1 / (h0 * (h0 + h1))) * Wm +
                                     ((h1 - h0) / (h0 * h1)) * Wk[i] +
                                     (h0 / (h1 * (h0 + h1))) * Wp;
                mm += std::abs(d_bdf - d_cen);
                flo = std::max(flo, mm / K1w);
            }
        }
        out.floor_inner = std::max(out.floor_inner, fli);
        out.floor_outer = std::max(out.floor_outer, flo);
    }
    return out;
}

} // namespace blowup
