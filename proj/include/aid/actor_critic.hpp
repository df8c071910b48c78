#ifndef AID_ACTOR_CRITIC_HPP
#define AID_ACTOR_CRITIC_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aid/backbone.hpp"
#include "aid/linalg.hpp"
#include "aid/net.hpp"
#include "aid/policy.hpp"
#include "aid/rng.hpp"
#include "aid/schedule.hpp"
#include "aid/solver.hpp"
#include "aid/task.hpp"

namespace aid {

// Fixed-width conditioning input: (mask bits, zero-filled observation).
inline Vec encode_xi(const Mask& mask, const Vec& observation) {
    Vec xi;
    xi.reserve(2 * observation.size());
    for (int b : mask.bits) xi.push_back(static_cast<double>(b));
    for (double v : observation) xi.push_back(v);
    return xi;
}

inline Vec encode_xi(const Task& task) { return encode_xi(task.mask, task.observation); }

struct TrainConfig {
    int grid_steps = 18;        // K
    int iterations = 0;         // N
    double critic_rate = 1e-4;  // a^c
    double actor_rate = 1e-4;   // a^a
    double clip_norm = 1.0;
    int batch_size = 2;
    TerminalWeights weights;
    std::uint64_t seed = 0;
    int iteration_offset = 0;  // continue a run's sub-stream indexing from here

    void validate() const {
        if (grid_steps < 2) throw std::invalid_argument("train: K must be >= 2");
        if (iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
        if (!(critic_rate > 0.0) || !(actor_rate > 0.0))
            throw std::invalid_argument("train: learning rates must be > 0");
        if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
        weights.validate();
    }
};

// Per-step record of one training trajectory. The terminal value slot is
// always the centered terminal target, never a critic evaluation.
struct StepRecord {
    double t = 0.0;
    double sigma = 0.0;
    double dt = 0.0;
    Vec state;
    Vec action;
    Vec mu;
    double value = 0.0;  // critic evaluation at (t, state)
    double delta = 0.0;
};

struct TrajectoryRecords {
    std::vector<StepRecord> steps;  // k = 0 .. K-1
    double terminal_value = 0.0;    // centered terminal target V_K
    int nfe = 0;
};

// delta = V_next - V_curr + (beta/2) ||A||^2 dt.
inline double td_residual(double v_next, double v_curr, const Vec& action, double beta, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("td_residual: dt must be > 0");
    return v_next - v_curr + 0.5 * beta * norm2(action) * dt;
}

// Actor and critic pair with optimizer state.
struct GuidanceModule {
    NetSpec actor_spec;
    NetSpec critic_spec;
    Vec phi;
    Vec theta;
    AdamState actor_opt;
    AdamState critic_opt;
    PolicyConfig policy;

    static GuidanceModule create(int state_dim, const PolicyConfig& policy, Rng& rng) {
        GuidanceModule m;
        m.actor_spec.state_dim = state_dim;
        m.actor_spec.head = HeadKind::vector;
        m.critic_spec.state_dim = state_dim;
        m.critic_spec.head = HeadKind::scalar;
        GuidanceNet actor(m.actor_spec), critic(m.critic_spec);
        m.phi = actor.init_params(rng, /*zero_head=*/true);
        m.theta = critic.init_params(rng, /*zero_head=*/false);
        m.actor_opt = AdamState(m.phi.size());
        m.critic_opt = AdamState(m.theta.size());
        m.policy = policy;
        m.policy.dimension = state_dim;
        m.policy.validate();
        return m;
    }
};

inline double critic_value(const GuidanceNet& net, const Vec& theta, double sigma, double t,
                           const Vec& x, const Vec& xi, double lambda, NetWorkspace& ws) {
    Vec out = net.forward(theta, sigma, x, xi, ws);
    return out[0] - lambda * t;
}

// Roll out one stochastic trajectory under the current policy and fill the
// records needed by the two updates.
inline TrajectoryRecords record_trajectory(const ScoreBackbone& backbone, const TimeGrid& grid,
                                           const GuidanceNet& actor, const GuidanceNet& critic,
                                           const GuidanceModule& mod, const Task& task,
                                           const TerminalWeights& weights, Rng& prior_rng,
                                           Rng& policy_rng) {
    int K = grid.steps;
    Vec xi = encode_xi(task);
    TrajectoryRecords rec;
    rec.steps.resize(static_cast<std::size_t>(K));

    Vec x(static_cast<std::size_t>(backbone.dimension));
    for (double& v : x) v = grid.sigmas[0] * prior_rng.normal();

    NetWorkspace ws;
    auto drift = [&](int node, const Vec& z) {
        Vec s = backbone.score(grid.sigmas[static_cast<std::size_t>(node)], z);
        ++rec.nfe;
        scale(s, 0.5 * grid.g2[static_cast<std::size_t>(node)]);
        return s;
    };

    for (int k = 0; k < K; ++k) {
        StepRecord& r = rec.steps[static_cast<std::size_t>(k)];
        r.t = grid.times[static_cast<std::size_t>(k)];
        r.sigma = grid.sigmas[static_cast<std::size_t>(k)];
        r.dt = grid.dt(k);
        r.state = x;
        r.value = critic_value(critic, mod.theta, r.sigma, r.t, x, xi, mod.policy.lambda, ws);
        r.mu = actor.forward(mod.phi, r.sigma, x, xi, ws);
        r.action = sample_action(r.mu, mod.policy, policy_rng);

        bool final_step = (k == K - 1);
        double h = r.dt;
        Vec d1 = drift(k, x);
        axpy(1.0, r.action, d1);
        if (final_step) {
            axpy(h, d1, x);
        } else {
            Vec mid(x);
            axpy(h, d1, mid);
            Vec d2 = drift(k + 1, mid);
            axpy(1.0, r.action, d2);
            axpy(0.5 * h, d1, x);
            axpy(0.5 * h, d2, x);
        }
    }
    double T = grid.times.back();
    rec.terminal_value = centered_terminal(weights, x, task, mod.policy.lambda, T);
    for (int k = 0; k < K; ++k) {
        StepRecord& r = rec.steps[static_cast<std::size_t>(k)];
        double v_next = (k == K - 1) ? rec.terminal_value : rec.steps[static_cast<std::size_t>(k + 1)].value;
        r.delta = td_residual(v_next, r.value, r.action, mod.policy.beta, r.dt);
    }
    return rec;
}

// sum_k dV/dtheta (t_k, X_k) delta_k; applied with a plus sign by the
// caller, per the critic stochastic-approximation update.
inline Vec critic_gradient_accumulate(const GuidanceNet& critic, const Vec& theta,
                                      const TrajectoryRecords& rec, const Vec& xi, double lambda) {
    if (rec.steps.empty()) throw std::logic_error("critic accumulation: incomplete records");
    Vec dir(theta.size(), 0.0);
    NetWorkspace ws;
    for (const StepRecord& r : rec.steps) {
        critic_value(critic, theta, r.sigma, r.t, r.state, xi, lambda, ws);
        critic.backward(theta, ws, Vec{r.delta}, dir);
    }
    return dir;
}

// sum_k (beta d / 2 lambda) (dmu/dphi)^T (A_k - mu_k) delta_k; applied with
// a minus sign by the caller, per the actor update.
inline Vec actor_gradient_accumulate(const GuidanceNet& actor, const Vec& phi,
                                     const TrajectoryRecords& rec, const Vec& xi,
                                     const PolicyConfig& policy) {
    if (rec.steps.empty()) throw std::logic_error("actor accumulation: incomplete records");
    Vec dir(phi.size(), 0.0);
    NetWorkspace ws;
    double score_scale = policy.beta * policy.dimension / (2.0 * policy.lambda);
    for (const StepRecord& r : rec.steps) {
        actor.forward(phi, r.sigma, r.state, xi, ws);
        Vec cot = sub(r.action, r.mu);
        scale(cot, score_scale * r.delta);
        actor.backward(phi, ws, cot, dir);
    }
    return dir;
}

struct TrainLogRow {
    int iteration = 0;
    double mean_abs_delta = 0.0;
    double mean_mu_norm = 0.0;
    double terminal_loss = 0.0;
    double action_cost = 0.0;
    double wallclock_ms = 0.0;
};

using TaskSampler = std::function<Task(Rng&)>;

// Training task source for the free-form family; center and strip are
// held out from training by construction.
inline TaskSampler make_training_task_sampler(const ScoreBackbone& backbone, MaskFamily family,
                                              int height, int width) {
    if (family != MaskFamily::freeform)
        throw std::invalid_argument("training tasks: center/strip families are evaluation-only");
    return [&backbone, family, height, width](Rng& rng) {
        return sample_task(backbone, family, height, width, rng);
    };
}

inline TaskSampler make_fixed_mask_task_sampler(const ScoreBackbone& backbone, Mask mask) {
    mask.validate();
    return [&backbone, mask](Rng& rng) { return sample_task_fixed_mask(backbone, mask, rng); };
}

// Offline training loop: one stochastic trajectory per batch element,
// critic update first, then actor, both through Adam with clipping.
inline std::vector<TrainLogRow> train(GuidanceModule& mod, const ScoreBackbone& backbone,
                                      const Schedule& sched, const TrainConfig& cfg,
                                      const TaskSampler& sampler) {
    cfg.validate();
    sched.validate();
    backbone.validate();
    TimeGrid grid = make_time_grid(cfg.grid_steps, sched);
    GuidanceNet actor(mod.actor_spec), critic(mod.critic_spec);
    std::vector<TrainLogRow> log;
    log.reserve(static_cast<std::size_t>(cfg.iterations));

    auto t_start = std::chrono::steady_clock::now();
    for (int n0 = 0; n0 < cfg.iterations; ++n0) {
        int n = n0 + cfg.iteration_offset;
        Vec g_theta(mod.theta.size(), 0.0);
        Vec g_phi(mod.phi.size(), 0.0);
        TrainLogRow row;
        row.iteration = n;
        for (int b = 0; b < cfg.batch_size; ++b) {
            std::uint64_t idx = static_cast<std::uint64_t>(n) * cfg.batch_size + b;
            Rng task_rng = Rng::stream(cfg.seed, "task", idx);
            Rng prior_rng = Rng::stream(cfg.seed, "prior", idx);
            Rng policy_rng = Rng::stream(cfg.seed, "policy", idx);
            Task task = sampler(task_rng);
            Vec xi = encode_xi(task);
            TrajectoryRecords rec = record_trajectory(backbone, grid, actor, critic, mod, task,
                                                      cfg.weights, prior_rng, policy_rng);
            // minus: Adam minimizes, the critic update ascends along the direction
            axpy(-1.0, critic_gradient_accumulate(critic, mod.theta, rec, xi, mod.policy.lambda), g_theta);
            axpy(1.0, actor_gradient_accumulate(actor, mod.phi, rec, xi, mod.policy), g_phi);

            for (const StepRecord& r : rec.steps) {
                row.mean_abs_delta += std::abs(r.delta);
                row.mean_mu_norm += norm(r.mu);
                row.action_cost += 0.5 * mod.policy.beta * norm2(r.action) * r.dt;
            }
            row.terminal_loss += rec.terminal_value + mod.policy.lambda * grid.times.back();
        }
        double inv_b = 1.0 / cfg.batch_size;
        scale(g_theta, inv_b);
        scale(g_phi, inv_b);
        row.mean_abs_delta *= inv_b / cfg.grid_steps;
        row.mean_mu_norm *= inv_b / cfg.grid_steps;
        row.terminal_loss *= inv_b;
        row.action_cost *= inv_b;
        if (!std::isfinite(row.terminal_loss) || !std::isfinite(row.mean_abs_delta))
            throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(n));
        try {
            adam_step(mod.critic_opt, mod.theta, g_theta, cfg.critic_rate, cfg.clip_norm);
            adam_step(mod.actor_opt, mod.phi, g_phi, cfg.actor_rate, cfg.clip_norm);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(std::string(e.what()) + " at iteration " + std::to_string(n));
        }
        row.wallclock_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t_start).count();
        log.push_back(row);
    }
    return log;
}

// Deterministic deployment: mean guidance, no policy noise. K may differ
// from the training grid.
inline Trajectory deploy(const GuidanceModule& mod, const ScoreBackbone& backbone,
                         const Schedule& sched, const Mask& mask, const Vec& observation,
                         int grid_steps, Rng& prior_rng) {
    TimeGrid grid = make_time_grid(grid_steps, sched);
    GuidanceNet actor(mod.actor_spec);
    Vec xi = encode_xi(mask, observation);
    NetWorkspace ws;
    MeanField mean = [&](int k, double /*t*/, const Vec& x) {
        return actor.forward(mod.phi, grid.sigmas[static_cast<std::size_t>(k)], x, xi, ws);
    };
    Rng unused(0);
    Vec x0(static_cast<std::size_t>(backbone.dimension));
    for (double& v : x0) v = grid.sigmas[0] * prior_rng.normal();
    return rollout(backbone, grid, mean, mod.policy, RolloutMode::deterministic, unused, x0);
}

}  // namespace aid

#endif
