#ifndef AID_HJB_HPP
#define AID_HJB_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "aid/linalg.hpp"

namespace aid {

// 1-D finite-difference value table for
//   V_t + V_x b(t,x) - V_x^2 / (2 beta) + lambda = 0,  V(T,x) = terminal(x) - lambda T,
// solved by explicit backward stepping with central differences in x
// (one-sided at the boundaries). lambda = 0 encodes the deterministic
// problem; the lambda shift propagates linearly through the identical
// scheme, so the value-shift identity holds to rounding on equal meshes.
struct GridValue {
    std::vector<double> xs;
    double dx = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
    double horizon = 0.0;
    int time_steps = 0;

    std::vector<double> slice_times;  // increasing subset of the time mesh
    std::vector<Vec> slices;          // V at each stored time

    // Consecutive fine-mesh slices kept for discrete-residual checks.
    struct ResidualPair {
        double t = 0.0;
        double dt = 0.0;
        Vec v;       // V(t, .)
        Vec v_next;  // V(t + dt, .)
    };
    std::vector<ResidualPair> residual_pairs;

    int nearest_slice(double t) const {
        int best = 0;
        double bd = 1e300;
        for (int i = 0; i < static_cast<int>(slice_times.size()); ++i) {
            double d = std::abs(slice_times[static_cast<std::size_t>(i)] - t);
            if (d < bd) { bd = d; best = i; }
        }
        return best;
    }

    // Bracketing stored slices and the interpolation weight toward the
    // later one; slice times are increasing but not uniformly spaced.
    void bracket_slices(double t, int& i0, int& i1, double& w) const {
        int n = static_cast<int>(slice_times.size());
        int lo = 0;
        while (lo + 1 < n && slice_times[static_cast<std::size_t>(lo + 1)] <= t) ++lo;
        i0 = lo;
        i1 = std::min(lo + 1, n - 1);
        double t0 = slice_times[static_cast<std::size_t>(i0)];
        double t1 = slice_times[static_cast<std::size_t>(i1)];
        w = (i1 == i0 || t1 <= t0) ? 0.0 : std::min(std::max((t - t0) / (t1 - t0), 0.0), 1.0);
    }

    int locate_x(double x) const {
        if (x < xs.front() - 1e-12 || x > xs.back() + 1e-12)
            throw std::domain_error("grid value: x outside mesh");
        int i = static_cast<int>(std::floor((x - xs.front()) / dx));
        return std::min(std::max(i, 0), static_cast<int>(xs.size()) - 2);
    }

    // Value linear in t between bracketing slices and linear in x.
    double value(double t, double x) const {
        int i0, i1;
        double wt;
        bracket_slices(t, i0, i1, wt);
        int i = locate_x(x);
        double wx = (x - xs[static_cast<std::size_t>(i)]) / dx;
        auto at = [&](int s) {
            const Vec& v = slices[static_cast<std::size_t>(s)];
            return (1.0 - wx) * v[static_cast<std::size_t>(i)] + wx * v[static_cast<std::size_t>(i + 1)];
        };
        return (1.0 - wt) * at(i0) + wt * at(i1);
    }

    // Central-difference V_x, interpolated linearly in t and in x.
    double value_gradient(double t, double x) const {
        int i0, i1;
        double wt;
        bracket_slices(t, i0, i1, wt);
        int n = static_cast<int>(xs.size());
        int i = locate_x(x);
        double wx = (x - xs[static_cast<std::size_t>(i)]) / dx;
        auto node_grad = [&](int s, int j) {
            const Vec& v = slices[static_cast<std::size_t>(s)];
            if (j == 0) return (v[1] - v[0]) / dx;
            if (j == n - 1) return (v[static_cast<std::size_t>(n - 1)] - v[static_cast<std::size_t>(n - 2)]) / dx;
            return (v[static_cast<std::size_t>(j + 1)] - v[static_cast<std::size_t>(j - 1)]) / (2.0 * dx);
        };
        auto grad = [&](int s) {
            return (1.0 - wx) * node_grad(s, i) + wx * node_grad(s, i + 1);
        };
        return (1.0 - wt) * grad(i0) + wt * grad(i1);
    }
};

using Drift1d = std::function<double(double, double)>;
using Terminal1d = std::function<double(double)>;

struct HjbOptions {
    int state_points = 401;
    int max_stored_slices = 201;
    int residual_pair_count = 8;
    double cfl_safety = 0.4;        // dt <= safety * dx / c
    double growth_budget = 1.0;     // dt <= 2 * budget * dx^2 / (T c^2); bounds the total
                                    // amplification of mesh-scale noise to about e^budget
    double slope_margin = 3.0;      // speed bound margin over the terminal slice
    int min_time_steps = 200;
    int max_time_steps = 4000000;
    double oscillation_factor = 50.0;  // abort when 2nd differences grow past this
};

namespace detail {

inline void central_gradient(const Vec& v, double dx, Vec& g) {
    int n = static_cast<int>(v.size());
    g.resize(v.size());
    g[0] = (v[1] - v[0]) / dx;
    g[static_cast<std::size_t>(n - 1)] =
        (v[static_cast<std::size_t>(n - 1)] - v[static_cast<std::size_t>(n - 2)]) / dx;
    for (int i = 1; i < n - 1; ++i)
        g[static_cast<std::size_t>(i)] =
            (v[static_cast<std::size_t>(i + 1)] - v[static_cast<std::size_t>(i - 1)]) / (2.0 * dx);
}

inline double max_second_difference(const Vec& v) {
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
        m = std::max(m, std::abs(v[i + 1] - 2.0 * v[i] + v[i - 1]));
    return m;
}

// Amplitude of sign-alternating second differences: mesh-scale dispersive
// oscillation flips sign between neighbors, while a genuine kink in the
// value gives a one-signed spike and must not trip the detector.
inline double max_alternating_oscillation(const Vec& v) {
    double m = 0.0;
    double prev2 = 0.0, prev1 = 0.0;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        double d2 = v[i + 1] - 2.0 * v[i] + v[i - 1];
        if (i >= 3 && prev2 * prev1 < 0.0 && prev1 * d2 < 0.0)
            m = std::max(m, std::min({std::abs(prev2), std::abs(prev1), std::abs(d2)}));
        prev2 = prev1;
        prev1 = d2;
    }
    return m;
}

}  // namespace detail

inline GridValue hjb_grid_solve(const Drift1d& drift, const Terminal1d& terminal, double beta,
                                double lambda, double horizon, double x_min, double x_max,
                                const HjbOptions& opts = {}) {
    if (!(beta > 0.0)) throw std::invalid_argument("hjb: beta must be > 0");
    if (!(x_max > x_min)) throw std::invalid_argument("hjb: empty state mesh");
    if (opts.state_points < 5) throw std::invalid_argument("hjb: state mesh too coarse");

    GridValue gv;
    gv.beta = beta;
    gv.lambda = lambda;
    gv.horizon = horizon;
    int nx = opts.state_points;
    gv.xs.resize(static_cast<std::size_t>(nx));
    gv.dx = (x_max - x_min) / (nx - 1);
    for (int i = 0; i < nx; ++i) gv.xs[static_cast<std::size_t>(i)] = x_min + gv.dx * i;

    Vec v(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i)
        v[static_cast<std::size_t>(i)] = terminal(gv.xs[static_cast<std::size_t>(i)]) - lambda * horizon;

    // Deterministic time step from the terminal slice: identical between
    // runs that differ only in lambda, which the value-shift test needs.
    Vec gx;
    detail::central_gradient(v, gv.dx, gx);
    double max_slope = 0.0;
    for (double g : gx) max_slope = std::max(max_slope, std::abs(g));
    double max_b = 0.0;
    for (int i = 0; i < nx; ++i) {
        double x = gv.xs[static_cast<std::size_t>(i)];
        for (int j = 0; j <= 8; ++j)
            max_b = std::max(max_b, std::abs(drift(horizon * j / 8.0, x)));
    }
    double c = max_b + opts.slope_margin * max_slope / beta;
    c = std::max(c, 1e-8);
    double dt = std::min(opts.cfl_safety * gv.dx / c,
                         2.0 * opts.growth_budget * gv.dx * gv.dx / (horizon * c * c));
    int nt = static_cast<int>(std::ceil(horizon / dt));
    nt = std::min(std::max(nt, opts.min_time_steps), opts.max_time_steps);
    dt = horizon / nt;
    gv.time_steps = nt;

    int slice_stride = std::max(1, nt / std::max(1, opts.max_stored_slices - 1));
    int pair_stride = std::max(1, nt / std::max(1, opts.residual_pair_count));
    double osc0 = detail::max_second_difference(v) + 1e-6;

    gv.slice_times.push_back(horizon);
    gv.slices.push_back(v);

    Vec vx, vnew(v.size());
    for (int step = 0; step < nt; ++step) {
        double t = horizon - dt * step;        // current slice time
        double t_new = horizon - dt * (step + 1);
        detail::central_gradient(v, gv.dx, vx);
        for (int i = 0; i < nx; ++i) {
            double g = vx[static_cast<std::size_t>(i)];
            double h = g * drift(t, gv.xs[static_cast<std::size_t>(i)]) - g * g / (2.0 * beta) + lambda;
            vnew[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] + dt * h;
        }
        if (step % pair_stride == 0 && static_cast<int>(gv.residual_pairs.size()) < opts.residual_pair_count)
            gv.residual_pairs.push_back({t_new, dt, vnew, v});
        std::swap(v, vnew);

        for (double val : v)
            if (!std::isfinite(val))
                throw std::runtime_error("hjb: non-finite value; refine the time mesh");
        if (detail::max_alternating_oscillation(v) > opts.oscillation_factor * osc0)
            throw std::runtime_error("hjb: value oscillation detected; refine the time mesh");

        if ((step + 1) % slice_stride == 0 || step + 1 == nt) {
            gv.slice_times.push_back(t_new);
            gv.slices.push_back(v);
        }
    }
    std::reverse(gv.slice_times.begin(), gv.slice_times.end());
    std::reverse(gv.slices.begin(), gv.slices.end());
    return gv;
}

// Compare a mean field against -(1/beta) V_x of the deterministic grid
// value at the given probes.
struct MeanRecoveryProbe {
    double t = 0.0;
    double x = 0.0;
};

struct MeanRecoveryReport {
    double max_gap = 0.0;
    double mean_gap = 0.0;
    std::vector<double> expected;
    std::vector<double> observed;
};

inline MeanRecoveryReport verify_mean_recovery(const GridValue& det_value,
                                               const std::function<double(double, double)>& mu,
                                               double beta,
                                               const std::vector<MeanRecoveryProbe>& probes) {
    MeanRecoveryReport rep;
    double sum = 0.0;
    for (const MeanRecoveryProbe& p : probes) {
        double expect = -det_value.value_gradient(p.t, p.x) / beta;
        double got = mu(p.t, p.x);
        double gap = std::abs(expect - got);
        rep.expected.push_back(expect);
        rep.observed.push_back(got);
        rep.max_gap = std::max(rep.max_gap, gap);
        sum += gap;
    }
    rep.mean_gap = probes.empty() ? 0.0 : sum / probes.size();
    return rep;
}

}  // namespace aid

#endif
