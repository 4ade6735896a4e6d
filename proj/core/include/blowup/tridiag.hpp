#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace blowup {

/// Symmetric tridiagonal matrix: diag d[0..m-1], off-diagonal e[0..m-2].
struct SymTridiag {
    std::vector<double> d;
    std::vector<double> e;
    std::size_t size() const { return d.size(); }
};

/// Solve (T) x = b for a general tridiagonal system given by (lower, diag,
/// upper); Thomas algorithm, no pivoting (diagonally dominant systems only).
inline std::vector<double> thomas_solve(const std::vector<double>& lower,
                                        const std::vector<double>& diag,
                                        const std::vector<double>& upper,
                                        std::vector<double> rhs) {
    const std::size_t m = diag.size();
    std::vector<double> c(m, 0.0);
    double piv = diag[0];
    if (piv == 0.0) throw std::runtime_error("thomas_solve: zero pivot");
    c[0] = (m > 1) ? upper[0] / piv : 0.0;
    rhs[0] /= piv;
    for (std::size_t i = 1; i < m; ++i) {
        piv = diag[i] - lower[i - 1] * c[i - 1];
        if (piv == 0.0) throw std::runtime_error("thomas_solve: zero pivot");
        if (i + 1 < m) c[i] = upper[i] / piv;
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = m - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

/// Number of eigenvalues of the pencil (K - x M) below x, with K symmetric
/// tridiagonal and M a positive diagonal: LDL^T inertia count of K - x M.
inline int sturm_count(const SymTridiag& K, const std::vector<double>& M, double x) {
    const std::size_t m = K.size();
    int count = 0;
    double q = K.d[0] - x * M[0];
    if (q < 0) ++count;
    for (std::size_t i = 1; i < m; ++i) {
        double e = K.e[i - 1];
        double denom = (q == 0.0) ? 1e-300 : q;
        q = (K.d[i] - x * M[i]) - e * e / denom;
        if (q < 0) ++count;
    }
    return count;
}

/// k-th (0-based, ascending) generalized eigenvalue of (K, diag M) by Sturm
/// bisection to relative tolerance ~1e-14.
inline double sturm_bisect_eigenvalue(const SymTridiag& K, const std::vector<double>& M,
                                      int k, double lo, double hi) {
    // widen until the bracket provably contains eigenvalue k
    while (sturm_count(K, M, lo) > k) lo -= std::max(1.0, std::abs(lo));
    while (sturm_count(K, M, hi) <= k) hi += std::max(1.0, std::abs(hi));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (sturm_count(K, M, mid) <= k)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * (std::abs(lo) + std::abs(hi) + 1.0)) break;
    }
    return 0.5 * (lo + hi);
}

/// Inverse iteration for the eigenvector of (K - lambda M) closest to shift;
/// returns the M-normalized vector. The shifted system is symmetrically
/// equilibrated first: on grids spanning many radial decades the raw rows
/// differ by orders of magnitude and the unscaled solve loses the
/// small-radius components of the mode.
inline std::vector<double> inverse_iteration(const SymTridiag& K, const std::vector<double>& M,
                                             double shift, int iters = 8) {
    const std::size_t m = K.size();
    std::vector<double> lower(m > 0 ? m - 1 : 0), diag(m), upper(m > 0 ? m - 1 : 0);
    // perturb the shift slightly off the eigenvalue to keep the solve stable
    const double eps = 1e-10 * (std::abs(shift) + 1.0);
    std::vector<double> scl(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double dv = K.d[i] - (shift + eps) * M[i];
        scl[i] = 1.0 / std::sqrt(std::max(std::abs(dv), 1e-300));
    }
    for (std::size_t i = 0; i < m; ++i)
        diag[i] = (K.d[i] - (shift + eps) * M[i]) * scl[i] * scl[i];
    for (std::size_t i = 0; i + 1 < m; ++i) lower[i] = upper[i] = K.e[i] * scl[i] * scl[i + 1];
    // seed with the M-weighted constant: smooth in the weighted inner product
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = M[i];
    for (int it = 0; it < iters; ++it) {
        std::vector<double> w(m); // (S A S)(S^{-1} x) = S v  with x the new iterate
        for (std::size_t i = 0; i < m; ++i) w[i] = v[i] * scl[i];
        w = thomas_solve(lower, diag, upper, std::move(w));
        for (std::size_t i = 0; i < m; ++i) v[i] = w[i] * scl[i];
        double nrm = 0.0;
        for (std::size_t i = 0; i < m; ++i) nrm += M[i] * v[i] * v[i];
        nrm = std::sqrt(nrm);
        if (!(nrm > 0) || !std::isfinite(nrm)) throw std::runtime_error("inverse_iteration: breakdown");
        for (auto& vi : v) vi /= nrm;
    }
    return v;
}

} // namespace blowup
