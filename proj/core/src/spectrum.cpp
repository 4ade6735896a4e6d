#include "blowup/spectrum.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "blowup/constants.hpp"
#include "blowup/profile.hpp"
#include "blowup/stepper.hpp"

namespace blowup {

namespace {

// ---- Gauss-collocation shooting for u'' = (lambda + q/r^2 - V) u -------------

struct ShootResult {
    double u_end = 0.0;
    int rescales = 0;
};

// one step of the 2-stage Gauss collocation scheme (order 4, A-stable) for the
// linear system y' = B(r) y, y = (u, u')
void gauss2_step(double r, double h, double lambda, double& u, double& up) {
    constexpr double s3 = 1.7320508075688772;
    const double c1 = 0.5 - s3 / 6.0, c2 = 0.5 + s3 / 6.0;
    const double a11 = 0.25, a12 = 0.25 - s3 / 6.0, a21 = 0.25 + s3 / 6.0, a22 = 0.25;
    auto w = [&](double rr) { return lambda + 2.0 / (rr * rr) - bubble_pUpm1(rr); };
    const double w1 = w(r + c1 * h), w2 = w(r + c2 * h);
    // stage unknowns k1=(k1u,k1p), k2=(k2u,k2p) solve the 4x4 linear system:
    // k1u = up + h(a11 k1p + a12 k2p)
    // k1p = w1 (u + h(a11 k1u + a12 k2u))
    // k2u = up + h(a21 k1p + a22 k2p)
    // k2p = w2 (u + h(a21 k1u + a22 k2u))
    double A[4][5] = {
        {1.0, -h * a11, 0.0, -h * a12, up},
        {-w1 * h * a11, 1.0, -w1 * h * a12, 0.0, w1 * u},
        {0.0, -h * a21, 1.0, -h * a22, up},
        {-w2 * h * a21, 0.0, -w2 * h * a22, 1.0, w2 * u}};
    // small dense Gaussian elimination with partial pivoting
    for (int col = 0; col < 4; ++col) {
        int piv = col;
        for (int rix = col + 1; rix < 4; ++rix)
            if (std::abs(A[rix][col]) > std::abs(A[piv][col])) piv = rix;
        if (piv != col)
            for (int c = 0; c < 5; ++c) std::swap(A[col][c], A[piv][c]);
        for (int rix = col + 1; rix < 4; ++rix) {
            const double fct = A[rix][col] / A[col][col];
            for (int c = col; c < 5; ++c) A[rix][c] -= fct * A[col][c];
        }
    }
    double k[4];
    for (int rix = 3; rix >= 0; --rix) {
        double s = A[rix][4];
        for (int c = rix + 1; c < 4; ++c) s -= A[rix][c] * k[c];
        k[rix] = s / A[rix][rix];
    }
    // b = (1/2, 1/2)
    u += 0.5 * h * (k[0] + k[2]);
    up += 0.5 * h * (k[1] + k[3]);
}

// power series launch near r = 0: u = sum c_k r^{2k+2}; V = 35(1+r^2)^{-2}
void series_start(double lambda, double r0, double& u, double& up) {
    constexpr int K = 12;
    std::array<double, K> c{};
    c[0] = 1.0;
    auto d = [&](int j) {
        if (j == 0) return lambda - 35.0;
        return 35.0 * ((j % 2 == 1) ? 1.0 : -1.0) * (j + 1);
    };
    for (int k = 1; k < K; ++k) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += d(j) * c[k - 1 - j];
        c[k] = s / (2.0 * k * (2.0 * k + 3.0));
    }
    u = up = 0.0;
    for (int k = K - 1; k >= 0; --k) {
        u = u * r0 * r0 + c[k];
        up = up * r0 * r0 + (2.0 * k + 2.0) * c[k];
    }
    u *= r0 * r0;
    up *= r0;
}

double shoot_boundary_value(double lambda, double R, double h_target) {
    const double r0 = 0.25;
    double u, up;
    series_start(lambda, r0, u, up);
    const int steps = std::max(64, int(std::ceil((R - r0) / h_target)));
    const double h = (R - r0) / steps;
    double r = r0;
    for (int i = 0; i < steps; ++i) {
        gauss2_step(r, h, lambda, u, up);
        r += h;
        const double m = std::max(std::abs(u), std::abs(up));
        if (m > 1e200) { u /= m; up /= m; }
    }
    return u;
}

double collocation_lambda(double R, double guess) {
    const double h = 0.01;
    double lo = guess - 0.5, hi = guess + 0.5;
    double flo = shoot_boundary_value(lo, R, h);
    double fhi = shoot_boundary_value(hi, R, h);
    int expand = 0;
    while (flo * fhi > 0 && expand++ < 8) {
        lo -= 0.5; hi += 0.5;
        flo = shoot_boundary_value(lo, R, h);
        fhi = shoot_boundary_value(hi, R, h);
    }
    if (flo * fhi > 0) throw std::runtime_error("collocation_lambda: no sign change");
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = shoot_boundary_value(mid, R, h);
        if ((fm < 0) == (flo < 0)) { lo = mid; flo = fm; }
        else hi = mid;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

// FD eigenvalue on the mapped grid, plus the next one down for the gap
void fd_lambda(int nodes, const SpectrumOptions& o, double& top, double& second) {
    auto grid = RadialGrid::tan_map(nodes, o.map_L, o.R_trunc);
    RadialOperator op(grid, 0, [](double r) { return bubble_pUpm1(r); });
    top = op.eigenvalue_top(0);
    second = op.eigenvalue_top(1);
}

} // namespace

DecayFit decay_fit(const std::vector<double>& r, const std::vector<double>& z, double r_lo,
                   double r_hi) {
    // linear LS for (log A, rate, power) in log z = log A - rate r - power log r
    double S[3][3] = {{0}}, b[3] = {0};
    int count = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < r_lo || r[i] > r_hi) continue;
        if (!(z[i] > 0)) throw std::invalid_argument("decay_fit: nonpositive sample");
        const double phi[3] = {1.0, -r[i], -std::log(r[i])};
        const double y = std::log(z[i]);
        for (int a = 0; a < 3; ++a) {
            b[a] += phi[a] * y;
            for (int c = 0; c < 3; ++c) S[a][c] += phi[a] * phi[c];
        }
        ++count;
    }
    if (count < 8) throw std::invalid_argument("decay_fit: too few samples in window");
    // 3x3 solve
    double A[3][4];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) A[i][j] = S[i][j];
        A[i][3] = b[i];
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int rix = col + 1; rix < 3; ++rix)
            if (std::abs(A[rix][col]) > std::abs(A[piv][col])) piv = rix;
        for (int c = 0; c < 4; ++c) std::swap(A[col][c], A[piv][c]);
        for (int rix = col + 1; rix < 3; ++rix) {
            const double f = A[rix][col] / A[col][col];
            for (int c = col; c < 4; ++c) A[rix][c] -= f * A[col][c];
        }
    }
    double x[3];
    for (int i = 2; i >= 0; --i) {
        double s = A[i][3];
        for (int j = i + 1; j < 3; ++j) s -= A[i][j] * x[j];
        x[i] = s / A[i][i];
    }
    DecayFit out;
    out.amplitude = std::exp(x[0]);
    out.rate = x[1];
    out.power = x[2];
    double rss = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < r_lo || r[i] > r_hi) continue;
        const double pred = x[0] - x[1] * r[i] - x[2] * std::log(r[i]);
        rss += (std::log(z[i]) - pred) * (std::log(z[i]) - pred);
    }
    out.residual = std::sqrt(rss / count);
    return out;
}

double EigenPair::z0_at(double rr) const {
    if (rr >= R_trunc)
        return decay.amplitude * std::pow(rr, -decay.power) * std::exp(-decay.rate * rr);
    if (rr <= r_match) return (rr <= 0.0) ? z0_origin : std::exp(core_interp(rr));
    return std::exp(tail_interp(rr));
}

EigenPair solve_eigenpair(const SpectrumOptions& opts_in) {
    SpectrumOptions o = opts_in;
    EigenPair out;

    for (int attempt = 0; attempt < 5; ++attempt) {
        // Richardson over three dyadic grids: lambda(h) = lambda + c2 h^2 + c4 h^4
        double l1, l2, l4, s1, s2, s4;
        fd_lambda(o.fd_nodes, o, l1, s1);
        fd_lambda(2 * o.fd_nodes, o, l2, s2);
        fd_lambda(4 * o.fd_nodes, o, l4, s4);
        const double r1 = l2 + (l2 - l1) / 3.0;
        const double r2 = l4 + (l4 - l2) / 3.0;
        out.lambda0_fd = r2 + (r2 - r1) / 15.0;
        out.lambda_second = s4 + (s4 - s2) / 3.0;

        out.lambda0_collocation = collocation_lambda(o.R_trunc, out.lambda0_fd);
        out.lambda0 = out.lambda0_collocation;
        out.cross_rel_diff =
            std::abs(out.lambda0_fd - out.lambda0_collocation) / std::abs(out.lambda0_collocation);

        out.R_trunc = o.R_trunc;
        out.boundary_decay = std::exp(-std::sqrt(out.lambda0) * o.R_trunc);
        if (out.boundary_decay < o.boundary_tol) break;
        o.R_trunc *= 1.5; // enlarge and retry per the precondition
    }
    if (!(out.lambda0 > 0))
        throw std::runtime_error("solve_eigenpair: no positive eigenvalue found "
                                 "(discretization failure)");
    if (!(out.lambda_second < out.lambda0))
        throw std::runtime_error("solve_eigenpair: degenerate top eigenvalue");
    if (out.cross_rel_diff > o.cross_tol)
        throw std::runtime_error("solve_eigenpair: cross-solver disagreement");

    // eigenvector on the finest mapped grid
    auto grid = RadialGrid::tan_map(4 * o.fd_nodes, o.map_L, o.R_trunc);
    RadialOperator op(grid, 0, [](double r) { return bubble_pUpm1(r); });
    const double lam_h = op.eigenvalue_top(0);
    auto u = op.eigenvector(lam_h);
    auto f = op.to_profile(u);
    if (f[0] < 0)
        for (auto& v : f) v = -v;
    double fmin = 1e300;
    for (double v : f) fmin = std::min(fmin, v);

    out.r = grid.r();

    // rebuild the tail by inward Gauss-collocation integration from the
    // asymptotic launch u ~ e^{-k r}(1 + 1/(k r)); the launch error decays like
    // e^{-2k (r_hi - r)} marching inward, so the tail shape is exact in double
    const double k = std::sqrt(out.lambda0);
    const double r_hi = o.R_trunc - 5.0;
    const double r_match = 8.0;
    out.r_match = r_match;
    std::vector<double> rt, ut;
    {
        double uu = std::exp(-k * r_hi) * (1.0 + 1.0 / (k * r_hi));
        double up = -k * uu - std::exp(-k * r_hi) / (k * r_hi * r_hi);
        const double h = -0.005;
        double rr = r_hi;
        rt.push_back(rr);
        ut.push_back(uu);
        while (rr > r_match - 1e-9) {
            gauss2_step(rr, h, out.lambda0, uu, up);
            rr += h;
            rt.push_back(rr);
            ut.push_back(uu);
        }
    }
    // amplitude match at r_match against the eigenvector (still well above the
    // inverse-iteration noise floor there)
    auto interp_nodes = [&](double rq) {
        // linear in log u on the grid samples
        const auto& r = grid.r();
        std::size_t i = 1;
        while (i + 2 < r.size() && r[i + 1] < rq) ++i;
        const double t = (rq - r[i]) / (r[i + 1] - r[i]);
        const double a = std::log(std::abs(f[i]) * r[i] * r[i]);
        const double b = std::log(std::abs(f[i + 1]) * r[i + 1] * r[i + 1]);
        return std::exp((1 - t) * a + t * b);
    };
    const double scale = interp_nodes(r_match) / ut.back();

    // normalized profile and evaluator tables
    std::vector<double> rc, zc; // core: log z0 on [0+, r_match]
    for (std::size_t i = 0; i < out.r.size(); ++i) {
        if (out.r[i] <= 0.0 || out.r[i] > r_match) continue;
        rc.push_back(out.r[i]);
        zc.push_back(std::log(f[i]));
    }
    std::vector<double> rtl, ztl; // tail (ascending)
    for (std::size_t i = rt.size(); i-- > 0;) {
        rtl.push_back(rt[i]);
        ztl.push_back(std::log(scale * ut[i] / (rt[i] * rt[i])));
    }
    // extend the tail table up to R_trunc with the pure asymptote so the
    // evaluator covers [r_match, R_trunc]
    {
        double rr = rtl.back();
        while (rr < o.R_trunc - 1e-9) {
            rr = std::min(rr + 1.0, o.R_trunc);
            rtl.push_back(rr);
            ztl.push_back(std::log(scale * std::exp(-k * rr) * (1.0 + 1.0 / (k * rr)) /
                                   (rr * rr)));
        }
    }

    Pchip core_un(rc, zc), tail_un(rtl, ztl);
    auto z_unnorm = [&](double rr) {
        if (rr <= 0.0) return f[0];
        if (rr <= r_match) return std::exp(core_un(rr));
        if (rr <= o.R_trunc) return std::exp(tail_un(rr));
        return 0.0;
    };
    // normalization: int Z0^2 dy = 1
    const double I2 = omega4() * integrate_panels([&](double rr) {
        const double z = z_unnorm(rr);
        return z * z * std::pow(rr, 4);
    }, 0.0, o.R_trunc, 600, QuadRule::GaussLegendre);
    const double nf = 1.0 / std::sqrt(I2);

    out.z0.resize(out.r.size());
    for (std::size_t i = 0; i < out.r.size(); ++i) out.z0[i] = nf * z_unnorm(out.r[i]);
    for (auto& v : zc) v += std::log(nf);
    for (auto& v : ztl) v += std::log(nf);
    out.core_interp = Pchip(rc, zc);
    out.tail_interp = Pchip(rtl, ztl);
    out.z0_origin = nf * f[0];
    out.r_match = r_match;
    {
        std::vector<double> zt(ztl.size());
        for (std::size_t i = 0; i < ztl.size(); ++i) zt[i] = std::exp(ztl[i]);
        out.decay = decay_fit(rtl, zt, 20.0, 60.0);
    }
    out.I_Z0sq = omega4() * integrate_panels([&](double rr) {
        const double z = out.z0_at(rr);
        return z * z * std::pow(rr, 4);
    }, 0.0, o.R_trunc, 600, QuadRule::GaussLegendre);

    if (fmin < -1e-8 * f[0])
        throw std::runtime_error("solve_eigenpair: eigenvector not positive");
    return out;
}

double rayleigh_quotient_fd(const SpectrumOptions& o, double& lambda_out) {
    auto grid = RadialGrid::tan_map(o.fd_nodes, o.map_L, o.R_trunc);
    RadialOperator op(grid, 0, [](double r) { return bubble_pUpm1(r); });
    lambda_out = op.eigenvalue_top(0);
    auto u = op.eigenvector(lambda_out);
    const auto& K = op.stiffness();
    const auto& M = op.mass();
    double num = 0.0, den = 0.0;
    const std::size_t m = u.size();
    for (std::size_t i = 0; i < m; ++i) {
        double Ku = K.d[i] * u[i];
        if (i > 0) Ku += K.e[i - 1] * u[i - 1];
        if (i + 1 < m) Ku += K.e[i] * u[i + 1];
        num += u[i] * Ku;
        den += M[i] * u[i] * u[i];
    }
    return -num / den;
}

} // namespace blowup
