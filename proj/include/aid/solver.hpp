#ifndef AID_SOLVER_HPP
#define AID_SOLVER_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aid/backbone.hpp"
#include "aid/linalg.hpp"
#include "aid/policy.hpp"
#include "aid/rng.hpp"
#include "aid/schedule.hpp"

namespace aid {

// Integration grid for the guided reverse ODE. K sigma-formula nodes plus
// an appended terminal node at sigma = 0, reached by a single Euler step;
// K steps total, NFE = 2K - 1.
//
// Node times are uniform, t_k = T k / K, so the grid is strictly increasing
// with t_0 = 0 and t_K = T while node k < K carries the k-th EDM sigma
// value. The effective noise interpolation maps node index affinely onto
// the sigma formula, and g^2 at each node is its closed-form derivative
// under that map.
struct TimeGrid {
    std::vector<double> times;   // size K+1
    std::vector<double> sigmas;  // size K+1, sigmas[K] = 0
    std::vector<double> g2;      // size K+1, effective -d(sigma^2)/dt at each node
    int steps = 0;               // K

    double dt(int k) const { return times[static_cast<std::size_t>(k + 1)] - times[static_cast<std::size_t>(k)]; }
};

inline TimeGrid make_time_grid(int steps, const Schedule& sched) {
    std::vector<double> sg = sigma_grid(steps, sched);  // validates steps >= 2
    TimeGrid g;
    g.steps = steps;
    double T = sched.horizon;
    g.times.resize(static_cast<std::size_t>(steps) + 1);
    g.sigmas.resize(static_cast<std::size_t>(steps) + 1);
    g.g2.resize(static_cast<std::size_t>(steps) + 1);
    double ds_dt = static_cast<double>(steps) / ((steps - 1) * T);  // index map s = t K / ((K-1) T)
    for (int k = 0; k <= steps; ++k) {
        g.times[static_cast<std::size_t>(k)] = T * static_cast<double>(k) / steps;
        if (k < steps) {
            g.sigmas[static_cast<std::size_t>(k)] = sg[static_cast<std::size_t>(k)];
            g.g2[static_cast<std::size_t>(k)] =
                -sched.dsigma2_ds(static_cast<double>(k) / (steps - 1)) * ds_dt;
        } else {
            g.sigmas[static_cast<std::size_t>(k)] = 0.0;
            g.g2[static_cast<std::size_t>(k)] = 0.0;
        }
    }
    return g;
}

// One solver step for dx/dt = drift(t, x) + u with the control held at its
// step-start value (zero-order hold). Heun for interior steps, Euler for
// the final step to the sigma = 0 node.
template <typename Drift>
Vec guided_step(Drift&& drift, double t0, double t1, const Vec& x, const Vec& u, bool final_euler) {
    if (!(t0 < t1)) throw std::domain_error("guided_step: non-monotone times");
    double h = t1 - t0;
    Vec d1 = drift(t0, x);
    axpy(1.0, u, d1);
    if (final_euler) {
        Vec out(x);
        axpy(h, d1, out);
        return out;
    }
    Vec mid(x);
    axpy(h, d1, mid);
    Vec d2 = drift(t1, mid);
    axpy(1.0, u, d2);
    Vec out(x);
    axpy(0.5 * h, d1, out);
    axpy(0.5 * h, d2, out);
    return out;
}

enum class RolloutMode { stochastic, deterministic };

struct Trajectory {
    std::vector<Vec> states;            // X_0 ... X_K
    std::vector<Vec> actions;           // A_0 ... A_{K-1}
    std::vector<double> action_cost;    // (beta/2) ||A_k||^2 dt_k
    int nfe = 0;                        // instrumented score-evaluation count

    double action_cost_sum() const {
        double s = 0.0;
        for (double v : action_cost) s += v;
        return s;
    }
};

// Guidance mean field: (k, t, x) -> mu. The observable input is captured by
// the callable.
using MeanField = std::function<Vec(int, double, const Vec&)>;

// Optional per-step state edit (the replacement baseline overwrites visible
// coordinates here). Called with the index of the node just reached.
using PostStepHook = std::function<void(int, Vec&)>;

// Roll out the guided reverse ODE over the full grid. Stochastic mode
// samples one action per step from the Gaussian policy; deterministic mode
// uses the mean. The score-evaluation count is instrumented, not derived.
inline Trajectory rollout(const ScoreBackbone& backbone, const TimeGrid& grid,
                          const MeanField& mean_field, const PolicyConfig& policy,
                          RolloutMode mode, Rng& rng, std::optional<Vec> initial = std::nullopt,
                          const PostStepHook& post_step = nullptr) {
    if (grid.steps < 2) throw std::invalid_argument("rollout: grid has fewer than 2 steps");
    Trajectory traj;
    int K = grid.steps;
    traj.states.reserve(static_cast<std::size_t>(K) + 1);
    traj.actions.reserve(static_cast<std::size_t>(K));
    traj.action_cost.reserve(static_cast<std::size_t>(K));

    Vec x;
    if (initial) {
        x = std::move(*initial);
    } else {
        x.resize(static_cast<std::size_t>(backbone.dimension));
        for (double& v : x) v = grid.sigmas[0] * rng.normal();
    }
    if (static_cast<int>(x.size()) != backbone.dimension)
        throw std::invalid_argument("rollout: state dimension mismatch");
    traj.states.push_back(x);

    auto node_of = [&](double t) {
        int k = static_cast<int>(std::lround(t * K / grid.times.back()));
        return std::min(std::max(k, 0), K);
    };
    auto drift = [&](double t, const Vec& z) {
        int k = node_of(t);
        Vec s = backbone.score(grid.sigmas[static_cast<std::size_t>(k)], z);
        ++traj.nfe;
        scale(s, 0.5 * grid.g2[static_cast<std::size_t>(k)]);
        return s;
    };

    for (int k = 0; k < K; ++k) {
        Vec mu = mean_field ? mean_field(k, grid.times[static_cast<std::size_t>(k)], x)
                            : Vec(x.size(), 0.0);
        if (static_cast<int>(mu.size()) != backbone.dimension)
            throw std::invalid_argument("rollout: control dimension mismatch");
        Vec a = (mode == RolloutMode::stochastic) ? sample_action(mu, policy, rng) : mu;
        bool final_step = (k == K - 1);
        x = guided_step(drift, grid.times[static_cast<std::size_t>(k)],
                        grid.times[static_cast<std::size_t>(k + 1)], x, a, final_step);
        if (post_step) post_step(k + 1, x);
        traj.action_cost.push_back(0.5 * policy.beta * norm2(a) * grid.dt(k));
        traj.actions.push_back(std::move(a));
        traj.states.push_back(x);
    }
    return traj;
}

}  // namespace aid

#endif
