#ifndef AID_LQ_HPP
#define AID_LQ_HPP

#include <cmath>
#include <stdexcept>

#include "aid/backbone.hpp"
#include "aid/linalg.hpp"
#include "aid/riccati.hpp"
#include "aid/solver.hpp"
#include "aid/task.hpp"

namespace aid {

// Linear-quadratic specialization for a single-Gaussian backbone. The
// reverse drift is affine,
//   b(t,x) = a(t) (m - x),  a(t) = g^2(t) / (2 (v + sigma(t)^2)),
// using the same continuous noise interpolation the integration grid is
// built from (node index mapped affinely onto the sigma formula, with the
// final segment ramping sigma^2 linearly to zero).
struct LqDynamics {
    Schedule sched;
    int grid_steps = 18;
    Vec component_mean;
    double component_variance = 0.0;

    static LqDynamics from_backbone(const ScoreBackbone& backbone, const Schedule& sched,
                                    int grid_steps) {
        if (backbone.components() != 1)
            throw std::invalid_argument("lq dynamics: backbone must be single-Gaussian");
        LqDynamics d;
        d.sched = sched;
        d.grid_steps = grid_steps;
        d.component_mean = backbone.means[0];
        d.component_variance = backbone.component_variance;
        return d;
    }

    // sigma^2 under the grid's effective time map.
    double sigma2(double t) const {
        double T = sched.horizon;
        int K = grid_steps;
        double t_break = T * (K - 1) / K;
        if (t <= t_break) {
            double s = t * K / ((K - 1) * T);
            double sg = sched.sigma_of_s(s);
            return sg * sg;
        }
        double s2min = sched.sigma_min * sched.sigma_min;
        return s2min * (1.0 - (t - t_break) * K / T);
    }

    double g2(double t) const {
        double T = sched.horizon;
        int K = grid_steps;
        double t_break = T * (K - 1) / K;
        if (t <= t_break) {
            double s = t * K / ((K - 1) * T);
            return -sched.dsigma2_ds(s) * K / ((K - 1) * T);
        }
        return sched.sigma_min * sched.sigma_min * K / T;
    }

    double a_coeff(double t) const {
        return 0.5 * g2(t) / (component_variance + sigma2(t));
    }

    Mat drift_matrix(double t) const {
        int n = static_cast<int>(component_mean.size());
        Mat a(n);
        double coef = -a_coeff(t);
        for (int i = 0; i < n; ++i) a(i, i) = coef;
        return a;
    }

    Vec drift_offset(double t) const {
        Vec c = component_mean;
        scale(c, a_coeff(t));
        return c;
    }
};

// Terminal weight matrix Q = alpha_vis M + alpha_hole (I - M), diagonal.
inline Mat lq_terminal_weight(const TerminalWeights& w, const Mask& mask) {
    int n = mask.dimension();
    Mat q(n);
    for (int i = 0; i < n; ++i)
        q(i, i) = mask.bits[static_cast<std::size_t>(i)] == 1 ? w.alpha_vis : w.alpha_hole;
    return q;
}

// E[x_clean | xi] for a single-Gaussian backbone: observed coordinates are
// pinned to y, hidden ones revert to the component mean.
inline Vec lq_posterior_mean(const ScoreBackbone& backbone, const Mask& mask, const Vec& y) {
    if (backbone.components() != 1)
        throw std::invalid_argument("lq posterior: backbone must be single-Gaussian");
    Vec m = backbone.means[0];
    for (std::size_t i = 0; i < m.size(); ++i)
        if (mask.bits[i] == 1) m[i] = y[i];
    return m;
}

// Riccati oracle for the conditional LQ problem of one observable input.
inline RiccatiSolution lq_riccati_oracle(const LqDynamics& dyn, const TerminalWeights& w,
                                         const Mask& mask, const Vec& y,
                                         const ScoreBackbone& backbone, double beta,
                                         int mesh_steps) {
    Mat q = lq_terminal_weight(w, mask);
    Vec center = lq_posterior_mean(backbone, mask, y);
    return riccati_solve([&dyn](double t) { return dyn.drift_matrix(t); },
                         [&dyn](double t) { return dyn.drift_offset(t); }, q, center, beta,
                         dyn.sched.horizon, mesh_steps);
}

}  // namespace aid

#endif
