#include "blowup/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace blowup {

namespace {

// 16-point Gauss-Legendre on [-1,1]; positive half, symmetric.
constexpr std::array<double, 8> kGLNodes = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr std::array<double, 8> kGLWeights = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

double panel_gl16(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i)
        s += kGLWeights[i] * (f(c - h * kGLNodes[i]) + f(c + h * kGLNodes[i]));
    return s * h;
}

// 17-point Clenshaw-Curtis weights on [-1,1], computed once.
const std::array<double, 17>& cc17_weights() {
    static const std::array<double, 17> w = [] {
        constexpr int N = 16;
        std::array<double, 17> out{};
        for (int j = 0; j <= N; ++j) {
            double theta = j * std::numbers::pi / N;
            double s = 0.0;
            for (int k = 1; k <= N / 2; ++k) {
                double bk = (2 * k == N) ? 1.0 : 2.0;
                s += bk * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
            }
            double cj = (j == 0 || j == N) ? 1.0 : 2.0;
            out[j] = cj / N * (1.0 - s);
        }
        return out;
    }();
    return w;
}

double panel_cc17(const std::function<double(double)>& f, double a, double b) {
    constexpr int N = 16;
    const auto& w = cc17_weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int j = 0; j <= N; ++j) {
        double x = std::cos(j * std::numbers::pi / N);
        s += w[j] * f(c + h * x);
    }
    return s * h;
}

double simpson_seg(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa,
                            double b, double fb, double fm, double whole, double tol,
                            int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson_seg(a, fa, m, fm, flm);
    const double right = simpson_seg(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

} // namespace

double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        int panels, QuadRule rule) {
    if (panels < 1) throw std::invalid_argument("integrate_panels: panels < 1");
    double s = 0.0;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h, x1 = (i + 1 == panels) ? b : a + (i + 1) * h;
        s += (rule == QuadRule::GaussLegendre) ? panel_gl16(f, x0, x1) : panel_cc17(f, x0, x1);
    }
    return s;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = simpson_seg(a, fa, b, fb, fm);
    return adaptive_simpson_rec(f, a, fa, b, fb, fm, whole, tol, max_depth);
}

double simpson_nonuniform(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("simpson_nonuniform: size mismatch");
    const auto w = simpson_weights(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
    return s;
}

std::vector<double> simpson_weights(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> w(n, 0.0);
    if (n < 2) return w;
    std::size_t i = 0;
    // pairs of intervals; exact for quadratics on nonuniform nodes
    while (i + 2 < n) {
        const double h0 = x[i + 1] - x[i], h1 = x[i + 2] - x[i + 1];
        const double H = h0 + h1;
        w[i] += H / 6.0 * (2.0 - h1 / h0);
        w[i + 1] += H / 6.0 * (H * H / (h0 * h1));
        w[i + 2] += H / 6.0 * (2.0 - h0 / h1);
        i += 2;
    }
    if (i + 1 < n) { // trailing single interval: trapezoid
        const double h = x[i + 1] - x[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

} // namespace blowup
