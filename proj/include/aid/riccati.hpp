#ifndef AID_RICCATI_HPP
#define AID_RICCATI_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "aid/linalg.hpp"

namespace aid {

// Closed-form quadratic value V(t,x) = 1/2 x^T P x + q^T x + r for affine
// drift b = A(t) x + c(t) and quadratic terminal 1/2 (x - xd)^T Q (x - xd).
// Backward ODEs (validated by substituting the quadratic ansatz into the
// HJB with minimizer u = -grad V / beta, and cross-checked against the
// grid solver):
//   Pdot = -(P A + A^T P) + P^2 / beta
//   qdot = -A^T q - P c + P q / beta
//   rdot = -q^T c + ||q||^2 / (2 beta)
// with P(T) = Q, q(T) = -Q xd, r(T) = 1/2 xd^T Q xd.
struct RiccatiSolution {
    std::vector<double> times;  // increasing, 0 .. T
    std::vector<Mat> p;
    std::vector<Vec> q;
    std::vector<double> r;
    double beta = 0.0;

    int locate(double t) const {
        if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
            throw std::domain_error("riccati: t outside mesh");
        double h = times[1] - times[0];
        int i = static_cast<int>(std::floor((t - times.front()) / h));
        return std::min(std::max(i, 0), static_cast<int>(times.size()) - 2);
    }

    // Linear interpolation in t.
    void interpolate(double t, Mat& pt, Vec& qt, double& rt) const {
        int i = locate(t);
        double h = times[static_cast<std::size_t>(i + 1)] - times[static_cast<std::size_t>(i)];
        double w = std::min(std::max((t - times[static_cast<std::size_t>(i)]) / h, 0.0), 1.0);
        const Mat& p0 = p[static_cast<std::size_t>(i)];
        const Mat& p1 = p[static_cast<std::size_t>(i + 1)];
        pt = p0;
        for (std::size_t k = 0; k < pt.a.size(); ++k) pt.a[k] = (1.0 - w) * p0.a[k] + w * p1.a[k];
        const Vec& q0 = q[static_cast<std::size_t>(i)];
        const Vec& q1 = q[static_cast<std::size_t>(i + 1)];
        qt.resize(q0.size());
        for (std::size_t k = 0; k < qt.size(); ++k) qt[k] = (1.0 - w) * q0[k] + w * q1[k];
        rt = (1.0 - w) * r[static_cast<std::size_t>(i)] + w * r[static_cast<std::size_t>(i + 1)];
    }

    double value(double t, const Vec& x) const {
        Mat pt;
        Vec qt;
        double rt;
        interpolate(t, pt, qt, rt);
        return 0.5 * dot(x, matvec(pt, x)) + dot(qt, x) + rt;
    }
};

using DriftMatrixFn = std::function<Mat(double)>;
using DriftOffsetFn = std::function<Vec(double)>;

namespace detail {

struct RiccatiState {
    Mat p;
    Vec q;
    double r;
};

inline RiccatiState riccati_rhs(const RiccatiState& s, const Mat& a, const Vec& c, double beta) {
    int n = s.p.n;
    Mat pa = matmul(s.p, a);
    Mat pdot(n);
    Mat pp = matmul(s.p, s.p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            pdot(i, j) = -(pa(i, j) + pa(j, i)) + pp(i, j) / beta;
    Vec qdot(static_cast<std::size_t>(n), 0.0);
    Vec pq = matvec(s.p, s.q);
    Vec pc = matvec(s.p, c);
    for (int i = 0; i < n; ++i) {
        double atq = 0.0;
        for (int j = 0; j < n; ++j) atq += a(j, i) * s.q[static_cast<std::size_t>(j)];
        qdot[static_cast<std::size_t>(i)] = -atq - pc[static_cast<std::size_t>(i)] + pq[static_cast<std::size_t>(i)] / beta;
    }
    double rdot = -dot(s.q, c) + 0.5 * norm2(s.q) / beta;
    return {pdot, qdot, rdot};
}

inline RiccatiState riccati_axpy(const RiccatiState& s, double h, const RiccatiState& d) {
    RiccatiState o = s;
    for (std::size_t i = 0; i < o.p.a.size(); ++i) o.p.a[i] += h * d.p.a[i];
    for (std::size_t i = 0; i < o.q.size(); ++i) o.q[i] += h * d.q[i];
    o.r += h * d.r;
    return o;
}

}  // namespace detail

// Backward RK4 integration of the Riccati system on a uniform mesh of
// `mesh_steps` intervals over [0, T].
inline RiccatiSolution riccati_solve(const DriftMatrixFn& drift_a, const DriftOffsetFn& drift_c,
                                     const Mat& terminal_q, const Vec& x_dagger, double beta,
                                     double horizon, int mesh_steps) {
    if (!(beta > 0.0)) throw std::invalid_argument("riccati_solve: beta must be > 0");
    if (mesh_steps < 2) throw std::invalid_argument("riccati_solve: mesh too coarse");
    int n = terminal_q.n;
    if (static_cast<int>(x_dagger.size()) != n)
        throw std::invalid_argument("riccati_solve: terminal dimension mismatch");

    RiccatiSolution sol;
    sol.beta = beta;
    sol.times.resize(static_cast<std::size_t>(mesh_steps) + 1);
    sol.p.resize(sol.times.size());
    sol.q.resize(sol.times.size());
    sol.r.resize(sol.times.size());
    double h = horizon / mesh_steps;
    for (int i = 0; i <= mesh_steps; ++i) sol.times[static_cast<std::size_t>(i)] = h * i;

    detail::RiccatiState s;
    s.p = terminal_q;
    Vec qd = matvec(terminal_q, x_dagger);
    s.q.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s.q[static_cast<std::size_t>(i)] = -qd[static_cast<std::size_t>(i)];
    s.r = 0.5 * dot(x_dagger, qd);

    sol.p[static_cast<std::size_t>(mesh_steps)] = s.p;
    sol.q[static_cast<std::size_t>(mesh_steps)] = s.q;
    sol.r[static_cast<std::size_t>(mesh_steps)] = s.r;

    for (int i = mesh_steps; i > 0; --i) {
        double t1 = sol.times[static_cast<std::size_t>(i)];
        double tm = t1 - 0.5 * h;
        double t0 = t1 - h;
        // classical RK4, stepping backward with step -h
        auto f = [&](double t, const detail::RiccatiState& st) {
            return detail::riccati_rhs(st, drift_a(t), drift_c(t), beta);
        };
        detail::RiccatiState k1 = f(t1, s);
        detail::RiccatiState k2 = f(tm, detail::riccati_axpy(s, -0.5 * h, k1));
        detail::RiccatiState k3 = f(tm, detail::riccati_axpy(s, -0.5 * h, k2));
        detail::RiccatiState k4 = f(t0, detail::riccati_axpy(s, -h, k3));
        for (std::size_t k = 0; k < s.p.a.size(); ++k)
            s.p.a[k] -= h / 6.0 * (k1.p.a[k] + 2.0 * k2.p.a[k] + 2.0 * k3.p.a[k] + k4.p.a[k]);
        for (std::size_t k = 0; k < s.q.size(); ++k)
            s.q[k] -= h / 6.0 * (k1.q[k] + 2.0 * k2.q[k] + 2.0 * k3.q[k] + k4.q[k]);
        s.r -= h / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
        for (double v : s.p.a)
            if (!std::isfinite(v))
                throw std::runtime_error("riccati_solve: blow-up at t = " + std::to_string(t0));
        sol.p[static_cast<std::size_t>(i - 1)] = s.p;
        sol.q[static_cast<std::size_t>(i - 1)] = s.q;
        sol.r[static_cast<std::size_t>(i - 1)] = s.r;
    }
    return sol;
}

// u*(t, x) = -(P(t) x + q(t)) / beta.
inline Vec lq_optimal_control(const RiccatiSolution& sol, double t, const Vec& x, double beta) {
    Mat pt;
    Vec qt;
    double rt;
    sol.interpolate(t, pt, qt, rt);
    Vec u = matvec(pt, x);
    axpy(1.0, qt, u);
    scale(u, -1.0 / beta);
    return u;
}

}  // namespace aid

#endif
