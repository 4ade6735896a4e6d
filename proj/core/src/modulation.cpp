#include "blowup/modulation.hpp"

#include <cmath>
#include <stdexcept>

#include "blowup/constants.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

double beta_n(const CoreIntegrals& I) { return 1.5 * I.I_Up / I.I_Z6sq; }

double alpha_star_const(double Zq_abs, double beta) {
    return 0.25 * beta * beta * Zq_abs * Zq_abs;
}

double mu_star(double t, double T, double Zq_abs, double beta) {
    if (t > T) throw std::invalid_argument("mu_star: t > T");
    const double d = T - t;
    return alpha_star_const(Zq_abs, beta) * d * d;
}

double mu_star_dot(double t, double T, double Zq_abs, double beta) {
    if (t > T) throw std::invalid_argument("mu_star: t > T");
    return -2.0 * alpha_star_const(Zq_abs, beta) * (T - t);
}

double gamma_constant(double Zq_abs, double beta) {
    // d/dmu [-beta Zq mu^{1/2}] at mu_* equals -gamma/(T-t) with
    // gamma = beta Zq / (2 sqrt(alpha_star)) = 1 identically
    return beta * Zq_abs / (2.0 * std::sqrt(alpha_star_const(Zq_abs, beta)));
}

double fit_gamma_perturbation(double Zq_abs, double beta, double T, double rel_perturbation) {
    // integrate mu' = -beta Zq sqrt(mu) by RK4 from perturbed initial data,
    // then fit log|mu - mu_*| against log(T-t)
    const double c = beta * Zq_abs;
    const double mu0 = mu_star(0.0, T, Zq_abs, beta) * (1.0 + rel_perturbation);
    const int N = 20000;
    const double t_end = 0.90 * T;
    const double h = t_end / N;
    auto f = [&](double m) { return -c * std::sqrt(std::max(m, 0.0)); };
    double m = mu0;
    std::vector<double> lt, ld;
    for (int i = 0; i <= N; ++i) {
        const double t = i * h;
        if (t >= 0.05 * T) {
            const double diff = std::abs(m - mu_star(t, T, Zq_abs, beta));
            if (diff > 0) {
                lt.push_back(std::log(T - t));
                ld.push_back(std::log(diff));
            }
        }
        const double k1 = f(m);
        const double k2 = f(m + 0.5 * h * k1);
        const double k3 = f(m + 0.5 * h * k2);
        const double k4 = f(m + h * k3);
        m += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    // least squares slope
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(lt.size());
    for (std::size_t i = 0; i < lt.size(); ++i) {
        sx += lt[i]; sy += ld[i]; sxx += lt[i] * lt[i]; sxy += lt[i] * ld[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---- projections ---------------------------------------------------------------

KernelTable::KernelTable(const RadialGrid& g, double Rin) : grid(&g), R(Rin) {
    const auto& r = g.r();
    z6.resize(r.size());
    z1.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        z6[i] = kernel_profile_dilation(r[i]);
        z1[i] = kernel_profile_translation(r[i]);
    }
    std::vector<double> tmp(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) tmp[i] = z6[i] * z6[i];
    I6 = omega4() * g.integrate_nodes(tmp);
    for (std::size_t i = 0; i < r.size(); ++i) tmp[i] = z1[i] * z1[i];
    I1 = omega4_mode1() * g.integrate_nodes(tmp);
}

double c_projection(const KernelTable& kt, const ModeField& h, std::size_t knot, int j) {
    if (j < 1 || j > 6) throw std::invalid_argument("c_projection: j must be in 1..6");
    const RadialGrid& g = *kt.grid;
    const std::size_t n = g.size();
    std::vector<double> tmp(n);
    if (j == 6) {
        for (std::size_t i = 0; i < n; ++i) tmp[i] = h.m0[knot][i] * kt.z6[i];
        return omega4() * g.integrate_nodes(tmp) / kt.I6;
    }
    if (!h.has_mode1) return 0.0;
    const auto& comp = h.m1[std::size_t(j - 1)];
    for (std::size_t i = 0; i < n; ++i) tmp[i] = comp[knot][i] * kt.z1[i];
    return omega4_mode1() * g.integrate_nodes(tmp) / kt.I1;
}

std::array<double, 6> c_projection_all(const KernelTable& kt, const ModeField& h,
                                       std::size_t knot) {
    std::array<double, 6> c{};
    for (int j = 1; j <= 6; ++j) c[std::size_t(j - 1)] = c_projection(kt, h, knot, j);
    return c;
}

// ---- time operators -------------------------------------------------------------

double T0_apply(const std::function<double(double)>& g, double gamma, double T, double eps,
                double t, double tol) {
    const double hi = T - eps;
    if (t >= hi) return 0.0;
    auto integrand = [&](double s) { return std::pow(T - s, gamma + 1.0) * g(s); };
    const double I = adaptive_simpson(integrand, t, hi, tol);
    return -std::pow(T - t, -gamma) * I;
}

double T0_decaying(const std::function<double(double)>& g, double gamma, double T, double eps,
                   double t, double tol) {
    const double hi = T - eps;
    if (t >= hi) return 0.0;
    auto integrand = [&](double s) { return std::pow(T - s, 1.0 - gamma) * g(s); };
    const double I = adaptive_simpson(integrand, t, hi, tol);
    return -std::pow(T - t, gamma) * I;
}

double T1_apply(const std::function<double(double)>& g, double T, double eps, double t,
                double tol) {
    const double hi = T - eps;
    if (t >= hi) return 0.0;
    auto integrand = [&](double s) { return (T - s) * g(s); };
    return adaptive_simpson(integrand, t, hi, tol);
}

// ---- trajectories ----------------------------------------------------------------

BubbleTrajectory BubbleTrajectory::leading(const TimeGrid& tg, double Zq_abs, double beta) {
    BubbleTrajectory tr;
    tr.times = &tg;
    tr.Zq_abs = Zq_abs;
    tr.beta = beta;
    const std::size_t K = tg.size();
    tr.mu_star_v.resize(K);
    tr.mu_star_dot_v.resize(K);
    tr.mu1.assign(K, 0.0);
    tr.mu1_dot.assign(K, 0.0);
    for (auto& c : tr.xi1) c.assign(K, 0.0);
    for (auto& c : tr.xi1_dot) c.assign(K, 0.0);
    const double a = alpha_star_const(Zq_abs, beta);
    for (std::size_t k = 0; k < K; ++k) {
        const double d = tg.Tmt[k];
        tr.mu_star_v[k] = a * d * d;
        tr.mu_star_dot_v[k] = -2.0 * a * d;
    }
    return tr;
}

double BubbleTrajectory::xi1_norm(std::size_t k) const {
    double s = 0.0;
    for (const auto& c : xi1) s += c[k] * c[k];
    return std::sqrt(s);
}

bool BubbleTrajectory::in_corridor(double alpha_lo, double beta_hi) const {
    for (std::size_t k = 0; k < times->size(); ++k) {
        const double mu0 = times->Tmt[k] * times->Tmt[k];
        const double m = mu(k);
        if (m < alpha_lo * mu0 || m > beta_hi * mu0) return false;
    }
    return true;
}

double BubbleTrajectory::mu_at(double t) const {
    // interpolate mu / (T-t)^2 (slowly varying) in T-t
    const auto& tm = times->Tmt;
    const double d = times->T - t;
    std::vector<double> x(tm.rbegin(), tm.rend());
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t k = tm.size() - 1 - i;
        y[i] = mu(k) / (tm[k] * tm[k]);
    }
    return lerp_table(x, y, d) * d * d;
}

std::vector<double> BubbleTrajectory::tau_table() const {
    // tau(t_k) = int_0^{t_k} mu^{-2}; exact on the piecewise representation
    // mu = a_k (T-t)^2 per interval with a_k interpolated
    const std::size_t K = times->size();
    std::vector<double> tau(K, 0.0);
    for (std::size_t k = 1; k < K; ++k) {
        const double d0 = times->Tmt[k - 1], d1 = times->Tmt[k];
        const double a0 = mu(k - 1) / (d0 * d0), a1 = mu(k) / (d1 * d1);
        const double abar = 0.5 * (a0 + a1);
        // int mu^-2 dt = int (T-t)^{-4}/a^2 dt = [ (T-t)^{-3} ]/(3 a^2)
        tau[k] = tau[k - 1] + (std::pow(d1, -3.0) - std::pow(d0, -3.0)) / (3.0 * abar * abar);
    }
    return tau;
}

// ---- ell ---------------------------------------------------------------------------

double ell_functional(const std::function<double(double)>& q_of_s,
                      const std::function<double(double)>& mu_of_s, double T, double eps,
                      double tol) {
    (void)tol;
    const double s_end = T - eps;
    auto inv_mu2 = [&](double s) {
        const double m = mu_of_s(s);
        return 1.0 / (m * m);
    };
    // march in s with steps sized so the exponent tau advances by ~1/4 per
    // step; within a step the exponent is resolved by nested Gauss rules, so
    // the damped weight e^{-tau(s)} mu^{-2} q is integrated to near machine
    // precision whether it spans the whole window or a microscopic layer
    auto dtau_gl4 = [&](double a, double b) {
        static const double gx[2] = {0.3399810435848563, 0.8611363115940526};
        static const double gw[2] = {0.6521451548625461, 0.3478548451374538};
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
            s += gw[i] * (inv_mu2(c - h * gx[i]) + inv_mu2(c + h * gx[i]));
        return s * h;
    };
    const double ds_floor = s_end / 40000.0;
    double total = 0.0, tau = 0.0, s = 0.0;
    int guard = 0;
    while (s < s_end && tau < 745.0 && guard++ < 200000) {
        double ds = std::max(0.25 / std::max(inv_mu2(s), 1e-300), ds_floor);
        ds = std::min(ds, s_end - s);
        // halve until the step's tau increment is moderate
        double dtau = dtau_gl4(s, s + ds);
        for (int h = 0; h < 40 && dtau > 0.5 && ds > 1e-300; ++h) {
            ds *= 0.35;
            dtau = dtau_gl4(s, s + ds);
        }
        // 16-point Gauss on the product, exponent accumulated by nested GL4
        {
            static const double gx[8] = {0.0950125098376374, 0.2816035507792589,
                                         0.4580167776572274, 0.6178762444026438,
                                         0.7554044083550030, 0.8656312023878317,
                                         0.9445750230732326, 0.9894009349916499};
            static const double gw[8] = {0.1894506104550685, 0.1826034150449236,
                                         0.1691565193950025, 0.1495959888165767,
                                         0.1246289712555339, 0.0951585116824928,
                                         0.0622535239386479, 0.0271524594117541};
            const double c = s + 0.5 * ds, h = 0.5 * ds;
            auto f = [&](double x) {
                const double t_loc = tau + dtau_gl4(s, x);
                return std::exp(-t_loc) * inv_mu2(x) * q_of_s(x);
            };
            double acc = 0.0;
            for (int i = 0; i < 8; ++i)
                acc += gw[i] * (f(c - h * gx[i]) + f(c + h * gx[i]));
            total += acc * h;
        }
        tau += dtau;
        s += ds;
    }
    return total;
}

double ell_functional(const ModeField& h, const std::vector<double>& z0_nodes,
                      const BubbleTrajectory& traj, double tol) {
    const RadialGrid& g = *h.grid;
    const TimeGrid& tg = *h.times;
    const std::size_t n = g.size();
    // q(t_k) = int h(.,t_k) Z0 dy at the knots, then linear in t between knots
    std::vector<double> qk(tg.size());
    std::vector<double> tmp(n);
    for (std::size_t k = 0; k < tg.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) tmp[i] = h.m0[k][i] * z0_nodes[i];
        qk[k] = omega4() * g.integrate_nodes(tmp);
    }
    auto q_of_s = [&](double s) { return lerp_table(tg.t, qk, s); };
    // fast mu(s): interpolate the slowly varying ratio mu/(T-t)^2
    std::vector<double> dx(tg.Tmt.rbegin(), tg.Tmt.rend());
    std::vector<double> ay(dx.size());
    for (std::size_t i = 0; i < dx.size(); ++i) {
        const std::size_t k = tg.size() - 1 - i;
        ay[i] = traj.mu(k) / (tg.Tmt[k] * tg.Tmt[k]);
    }
    const double T = tg.T;
    auto mu_of_s = [&, T](double s) {
        const double d = T - s;
        return lerp_table(dx, ay, d) * d * d;
    };
    return ell_functional(q_of_s, mu_of_s, tg.T, tg.eps, tol);
}

} // namespace blowup
