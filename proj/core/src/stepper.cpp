#include "blowup/stepper.hpp"

#include <cmath>
#include <stdexcept>

namespace blowup {

// P1 finite elements against the radial measure r^4 dr:
//   K_ij = int r^4 f' v' + int [ ell(ell+3) r^2 - r^4 V ] f v,   M_i = int r^4 hat_i
// so that A = -M^{-1} K realizes  f'' + (4/r) f' - ell(ell+3)/r^2 f + V f.
// Constants are exactly in the kernel for ell = 0, V = 0, which keeps smooth
// fields clean across many radial scales; regularity at the origin is the
// natural boundary condition of the weighted form. Dirichlet at r_max; the
// origin node is a Dirichlet zero only in the ell = 1 sector (odd profiles).
RadialOperator::RadialOperator(const RadialGrid& grid, int ell,
                               std::function<double(double)> potential)
    : grid_(&grid), ell_(ell) {
    const auto& r = grid.r();
    const std::size_t n = r.size();
    if (n < 3) throw std::invalid_argument("RadialOperator: grid too small");
    const std::size_t lo = (ell == 0) ? 0 : 1; // first interior node
    const std::size_t m = n - 1 - lo;
    K_.d.assign(m, 0.0);
    K_.e.assign(m - 1, 0.0);
    M_.assign(m, 0.0);
    lo_ = lo;

    // 4-point Gauss per element (exact for the r^4 products of linear shapes)
    static const double gx[2] = {0.3399810435848563, 0.8611363115940526};
    static const double gw[2] = {0.6521451548625461, 0.3478548451374538};
    const double qcent = double(ell * (ell + 3));
    for (std::size_t e = 0; e + 1 < n; ++e) {
        const double h = r[e + 1] - r[e];
        double kdd = 0.0, m00 = 0.0, m01 = 0.0, m11 = 0.0, w0 = 0.0, w1 = 0.0;
        for (int gp = 0; gp < 4; ++gp) {
            const double xg = (gp < 2) ? 0.5 * (1.0 - gx[gp]) : 0.5 * (1.0 + gx[gp - 2]);
            const double wg = 0.5 * ((gp < 2) ? gw[gp] : gw[gp - 2]) * h;
            const double rr = r[e] + xg * h;
            const double r4 = rr * rr * rr * rr;
            double c = qcent * rr * rr;
            if (potential) c -= r4 * potential(rr);
            const double N0 = 1.0 - xg, N1 = xg;
            kdd += wg * r4 / (h * h);
            m00 += wg * c * N0 * N0;
            m01 += wg * c * N0 * N1;
            m11 += wg * c * N1 * N1;
            w0 += wg * r4 * N0;
            w1 += wg * r4 * N1;
        }
        const long il = long(e) - long(lo);      // local index of left node
        const long ir = long(e + 1) - long(lo);  // local index of right node
        const bool left_in = il >= 0 && std::size_t(il) < m;
        const bool right_in = ir >= 0 && std::size_t(ir) < m;
        if (left_in) {
            K_.d[std::size_t(il)] += kdd + m00;
            M_[std::size_t(il)] += w0;
        }
        if (right_in) {
            K_.d[std::size_t(ir)] += kdd + m11;
            M_[std::size_t(ir)] += w1;
        }
        if (left_in && right_in) K_.e[std::size_t(il)] += -kdd + m01;
    }
}

double RadialOperator::eigenvalue_top(int k) const {
    // eigenvalues of A = -(pencil (K, M)); top of A = -(smallest of pencil)
    double lo = 1e300, hi = -1e300;
    const std::size_t m = K_.size();
    for (std::size_t i = 0; i < m; ++i) {
        double rad = 0.0;
        if (i > 0) rad += std::abs(K_.e[i - 1]);
        if (i + 1 < m) rad += std::abs(K_.e[i]);
        lo = std::min(lo, (K_.d[i] - rad) / M_[i]);
        hi = std::max(hi, (K_.d[i] + rad) / M_[i]);
    }
    const double mu = sturm_bisect_eigenvalue(K_, M_, k, lo, hi);
    return -mu;
}

std::vector<double> RadialOperator::eigenvector(double lambda) const {
    return inverse_iteration(K_, M_, -lambda);
}

std::vector<double> RadialOperator::fundamental_mode(double& lambda, int iters) const {
    const std::size_t m = K_.size();
    std::vector<double> lower(m - 1), diag(m), upper(m - 1), v(m);
    for (std::size_t i = 0; i < m; ++i) diag[i] = K_.d[i];
    for (std::size_t i = 0; i + 1 < m; ++i) lower[i] = upper[i] = K_.e[i];
    for (std::size_t i = 0; i < m; ++i) v[i] = M_[i];
    for (int it = 0; it < iters; ++it) {
        std::vector<double> rhs(m);
        for (std::size_t i = 0; i < m; ++i) rhs[i] = M_[i] * v[i];
        v = thomas_solve(lower, diag, upper, rhs);
        double n2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) n2 += M_[i] * v[i] * v[i];
        const double nrm = std::sqrt(n2);
        if (!(nrm > 0)) throw std::runtime_error("fundamental_mode: breakdown");
        for (auto& x : v) x /= nrm;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double Kv = K_.d[i] * v[i];
        if (i > 0) Kv += K_.e[i - 1] * v[i - 1];
        if (i + 1 < m) Kv += K_.e[i] * v[i + 1];
        num += v[i] * Kv;
        den += M_[i] * v[i] * v[i];
    }
    lambda = num / den;
    if (v[m / 2] < 0)
        for (auto& x : v) x = -x;
    return to_profile(v);
}

std::vector<double> RadialOperator::to_profile(const std::vector<double>& x) const {
    const std::size_t n = grid_->size();
    std::vector<double> f(n, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) f[i + lo_] = x[i];
    return f;
}

std::vector<double> RadialOperator::from_profile(const std::vector<double>& f) const {
    const std::size_t m = K_.size();
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = f[i + lo_];
    return x;
}

HeatStepper::HeatStepper(const RadialOperator& op, Scheme scheme) : op_(&op), scheme_(scheme) {}

std::vector<std::vector<double>> HeatStepper::march(
    const std::vector<double>& f0, const std::vector<double>& t,
    const std::function<std::vector<double>(std::size_t)>& source,
    const std::function<double(std::size_t)>& coeff,
    const std::function<void(std::vector<double>&, std::size_t)>& on_step) const {
    const std::size_t K = t.size();
    if (K < 2) throw std::invalid_argument("HeatStepper: need at least two knots");
    const auto& Kmat = op_->stiffness();
    const auto& M = op_->mass();
    const std::size_t m = Kmat.size();

    std::vector<std::vector<double>> out(K);
    out[0] = f0;
    std::vector<double> u_prev = op_->from_profile(f0);
    std::vector<double> u_prev2;

    std::vector<double> lower(m - 1), diag(m), upper(m - 1), rhs(m);
    for (std::size_t k = 1; k < K; ++k) {
        const double dt = t[k] - t[k - 1];
        if (!(dt > 0)) throw std::invalid_argument("HeatStepper: time grid not increasing");
        const double c = coeff(k);
        std::vector<double> s = op_->from_profile(source(k));
        const bool bdf2 = (scheme_ == Scheme::BDF2) && k >= 2;
        double a0, a1, a2; // c (a0 u_k + a1 u_{k-1} + a2 u_{k-2})/dt = A u_k + s
        if (bdf2) {
            const double dt1 = t[k - 1] - t[k - 2];
            const double w = dt / dt1;
            a0 = (1.0 + 2.0 * w) / (1.0 + w);
            a1 = -(1.0 + w);
            a2 = w * w / (1.0 + w);
        } else {
            a0 = 1.0; a1 = -1.0; a2 = 0.0;
        }
        for (std::size_t i = 0; i < m; ++i) {
            diag[i] = c * M[i] * a0 / dt + Kmat.d[i];
            rhs[i] = M[i] * (s[i] - c / dt * (a1 * u_prev[i] + (bdf2 ? a2 * u_prev2[i] : 0.0)));
        }
        for (std::size_t i = 0; i + 1 < m; ++i) lower[i] = upper[i] = Kmat.e[i];
        std::vector<double> u_new = thomas_solve(lower, diag, upper, rhs);
        auto f_new = op_->to_profile(u_new);
        if (on_step) {
            on_step(f_new, k);
            u_new = op_->from_profile(f_new);
        }
        u_prev2 = std::move(u_prev);
        u_prev = std::move(u_new);
        out[k] = std::move(f_new);
    }
    return out;
}

} // namespace blowup
