#ifndef AID_BASELINES_HPP
#define AID_BASELINES_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include "aid/backbone.hpp"
#include "aid/linalg.hpp"
#include "aid/solver.hpp"
#include "aid/task.hpp"

namespace aid {

enum class BaselineKind { unguided, replacement, dps_lite };

inline BaselineKind baseline_from_string(const std::string& s) {
    if (s == "unguided") return BaselineKind::unguided;
    if (s == "replacement") return BaselineKind::replacement;
    if (s == "dps_lite") return BaselineKind::dps_lite;
    throw std::invalid_argument("unknown baseline: " + s);
}

inline const char* to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::unguided: return "unguided";
        case BaselineKind::replacement: return "replacement";
        default: return "dps_lite";
    }
}

// Posterior-gradient control through the Tweedie denoised estimate:
//   x0_hat = x + sigma^2 S(sigma, x),
//   u = -zeta * grad_x 1/2 ||M x0_hat - y||^2,
// with the score Jacobian available in closed form.
inline Vec dps_lite_control(const ScoreBackbone& backbone, double sigma, const Vec& x,
                            const Mask& mask, const Vec& y, double zeta) {
    double s2 = sigma * sigma;
    Vec score = backbone.score(sigma, x);
    Vec x0 = x;
    axpy(s2, score, x0);
    // residual on visible coordinates
    Vec r(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (mask.bits[i] == 1) r[i] = x0[i] - y[i];
    // u = -zeta (I + sigma^2 J)^T r, J symmetric
    Mat j = backbone.score_jacobian(sigma, x);
    Vec jr = matvec(j, r);
    Vec u = r;
    axpy(s2, jr, u);
    scale(u, -zeta);
    return u;
}

// Fixed-backbone comparison methods sharing the guided solver. Replacement
// overwrites visible coordinates after each step with y plus noise at the
// next node's sigma (exactly y at the terminal sigma = 0 node), using a
// sub-stream keyed by step so baseline noise never couples to the policy's.
inline Trajectory run_baseline_trajectory(BaselineKind kind, const ScoreBackbone& backbone,
                                          const TimeGrid& grid, const Mask& mask, const Vec& y,
                                          double dps_strength, Rng& prior_rng,
                                          std::uint64_t task_seed) {
    if (mask.dimension() != backbone.dimension || y.size() != mask.bits.size())
        throw std::invalid_argument("run_baseline: shape mismatch");

    PolicyConfig dummy;
    dummy.dimension = backbone.dimension;
    dummy.lambda = 1.0;
    dummy.beta = 1.0;

    Vec x0(static_cast<std::size_t>(backbone.dimension));
    for (double& v : x0) v = grid.sigmas[0] * prior_rng.normal();

    MeanField control = nullptr;
    PostStepHook hook = nullptr;
    if (kind == BaselineKind::dps_lite) {
        control = [&backbone, &grid, &mask, &y, dps_strength](int k, double, const Vec& x) {
            return dps_lite_control(backbone, grid.sigmas[static_cast<std::size_t>(k)], x, mask, y,
                                    dps_strength);
        };
    } else if (kind == BaselineKind::replacement) {
        hook = [&grid, &mask, &y, task_seed](int next_k, Vec& x) {
            double sig = grid.sigmas[static_cast<std::size_t>(next_k)];
            Rng step_rng = Rng::stream(task_seed, "replacement", static_cast<std::uint64_t>(next_k));
            for (std::size_t i = 0; i < x.size(); ++i)
                if (mask.bits[i] == 1) x[i] = y[i] + sig * step_rng.normal();
        };
    }

    Rng unused(0);
    return rollout(backbone, grid, control, dummy, RolloutMode::deterministic, unused, x0, hook);
}

inline Vec run_baseline(BaselineKind kind, const ScoreBackbone& backbone, const TimeGrid& grid,
                        const Mask& mask, const Vec& y, double dps_strength, Rng& prior_rng,
                        std::uint64_t task_seed) {
    return run_baseline_trajectory(kind, backbone, grid, mask, y, dps_strength, prior_rng, task_seed)
        .states.back();
}

// Mean squared error restricted to the missing region.
inline double masked_mse(const Vec& output, const Task& task) {
    if (output.size() != task.clean.size())
        throw std::invalid_argument("masked_mse: shape mismatch");
    int missing = task.mask.missing_count();
    if (missing == 0) throw std::domain_error("masked_mse: empty missing region");
    double s = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i)
        if (task.mask.bits[i] == 0) {
            double e = output[i] - task.clean[i];
            s += e * e;
        }
    return s / missing;
}

// 10 log10(R^2 / mse), capped at 100 dB near-perfect reconstructions.
inline double masked_psnr(const Vec& output, const Task& task, double data_range) {
    if (!(data_range > 0.0)) throw std::invalid_argument("masked_psnr: data_range must be > 0");
    double mse = masked_mse(output, task);
    double r2 = data_range * data_range;
    if (mse <= 1e-10 * r2) return 100.0;
    return std::min(100.0, 10.0 * std::log10(r2 / mse));
}

}  // namespace aid

#endif
