#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "blowup/grid.hpp"

namespace blowup {

/// Time knots on [0, T - eps], geometrically refined toward the end so that
/// T - t decreases by a fixed factor per step (all modulation quantities are
/// power laws in T - t). T - t is stored explicitly; never recompute it by
/// subtraction near the end.
struct TimeGrid {
    double T = 0.0;
    double eps = 0.0;
    std::vector<double> t;
    std::vector<double> Tmt; // T - t, same indexing

    static TimeGrid geometric(double T, double eps, double shrink_per_step = 0.96,
                              int min_knots = 16) {
        if (!(T > 0) || !(eps > 0) || eps >= T || !(shrink_per_step > 0) ||
            shrink_per_step >= 1.0)
            throw std::invalid_argument("TimeGrid::geometric: bad parameters");
        TimeGrid g;
        g.T = T;
        g.eps = eps;
        std::vector<double> tm;
        double v = T;
        tm.push_back(v);
        while (v > eps) {
            v *= shrink_per_step;
            if (v < eps * 1.0000001) v = eps;
            tm.push_back(v);
        }
        while (int(tm.size()) < min_knots) tm.push_back(eps); // degenerate guard
        g.Tmt = tm;
        g.t.resize(tm.size());
        for (std::size_t i = 0; i < tm.size(); ++i) g.t[i] = T - tm[i];
        return g;
    }

    static TimeGrid uniform(double T, double eps, int knots) {
        if (knots < 2) throw std::invalid_argument("TimeGrid::uniform: knots < 2");
        TimeGrid g;
        g.T = T;
        g.eps = eps;
        g.t.resize(knots);
        g.Tmt.resize(knots);
        const double t_end = T - eps;
        for (int i = 0; i < knots; ++i) {
            g.t[i] = t_end * i / (knots - 1);
            g.Tmt[i] = T - g.t[i];
        }
        g.Tmt.back() = eps;
        return g;
    }

    std::size_t size() const { return t.size(); }
};

/// Space-time field truncated to spherical-harmonic degrees 0 and 1:
/// f(y, t_k) = m0[k](r) + sum_j m1[j][k](r) y_j / |y|.
/// Degree-1 storage is allocated lazily; a pure radial field carries only m0.
struct ModeField {
    const RadialGrid* grid = nullptr;
    const TimeGrid* times = nullptr;
    std::vector<std::vector<double>> m0;                 // [knot][node]
    std::array<std::vector<std::vector<double>>, 5> m1;  // [component][knot][node]
    bool has_mode1 = false;

    ModeField() = default;
    ModeField(const RadialGrid& g, const TimeGrid& tg, bool with_mode1 = false)
        : grid(&g), times(&tg) {
        m0.assign(tg.size(), std::vector<double>(g.size(), 0.0));
        if (with_mode1) enable_mode1();
    }

    void enable_mode1() {
        if (has_mode1) return;
        for (auto& comp : m1)
            comp.assign(times->size(), std::vector<double>(grid->size(), 0.0));
        has_mode1 = true;
    }

    std::size_t knots() const { return m0.size(); }
    std::size_t nodes() const { return grid ? grid->size() : 0; }

    /// sup over directions of |f(y, t_k)| at one node: |m0| + |m1 vector|.
    double abs_max_at(std::size_t k, std::size_t node) const {
        double v = std::abs(m0[k][node]);
        if (has_mode1) {
            double s = 0.0;
            for (const auto& comp : m1) s += comp[k][node] * comp[k][node];
            v += std::sqrt(s);
        }
        return v;
    }
};

} // namespace blowup
