#ifndef AID_EXPERIMENT_HPP
#define AID_EXPERIMENT_HPP

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "aid/actor_critic.hpp"
#include "aid/backbone.hpp"
#include "aid/baselines.hpp"
#include "aid/config.hpp"
#include "aid/csv.hpp"
#include "aid/lq.hpp"
#include "aid/riccati.hpp"
#include "aid/solver.hpp"
#include "aid/task.hpp"

namespace aid {

struct EvalRow {
    int task_id = 0;
    std::string family;
    std::string method;
    int grid_steps = 0;
    int nfe = 0;
    double masked_mse = 0.0;
    double masked_psnr = 0.0;
    std::uint64_t seed = 0;
};

struct EvalCell {
    std::string method;
    std::string family;
    int grid_steps = 0;
    int nfe = 0;
    double mse_mean = 0.0, mse_std = 0.0;
    double psnr_mean = 0.0, psnr_std = 0.0;
    int seed_count = 0;
};

struct EvalResult {
    std::vector<EvalRow> rows;
    std::vector<EvalCell> summary;
};

struct EvalSetup {
    int task_count = 200;
    std::vector<MaskFamily> families = {MaskFamily::freeform};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::vector<int> deploy_steps = {18, 12};
    double dps_strength = 1.0;
    int height = 8;
    int width = 8;
    double data_range = 1.0;
};

inline void mean_std(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    sd = 0.0;
    if (v.size() > 1) {
        for (double x : v) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
    }
}

// Evaluate every method over a deterministic task manifest: one task per
// (seed, family, id), shared prior draw per (task, K) across methods so an
// untrained module reproduces the unguided rows exactly.
inline EvalResult run_evaluation(const ScoreBackbone& backbone, const Schedule& sched,
                                 const EvalSetup& setup, const GuidanceModule* mod) {
    backbone.validate();
    sched.validate();
    EvalResult res;
    std::vector<std::string> methods = {"unguided", "replacement", "dps_lite"};
    if (mod) methods.push_back("aid");

    std::map<int, TimeGrid> grids;
    for (int K : setup.deploy_steps) grids.emplace(K, make_time_grid(K, sched));

    for (std::uint64_t seed : setup.seeds) {
        for (std::size_t fi = 0; fi < setup.families.size(); ++fi) {
            MaskFamily family = setup.families[fi];
            for (int id = 0; id < setup.task_count; ++id) {
                std::uint64_t uid = fi * static_cast<std::uint64_t>(setup.task_count) +
                                    static_cast<std::uint64_t>(id);
                Rng task_rng = Rng::stream(seed, "evaltask", uid);
                Task task = sample_task(backbone, family, setup.height, setup.width, task_rng);
                std::uint64_t repl_seed = seed * 1000003ull + uid;
                for (int K : setup.deploy_steps) {
                    const TimeGrid& grid = grids.at(K);
                    for (const std::string& method : methods) {
                        Rng prior = Rng::stream(seed, "evalprior", uid);
                        Vec out;
                        int nfe = 0;
                        if (method == "aid") {
                            Trajectory tr = deploy(*mod, backbone, sched, task.mask,
                                                   task.observation, K, prior);
                            out = tr.states.back();
                            nfe = tr.nfe;
                        } else {
                            Trajectory tr = run_baseline_trajectory(
                                baseline_from_string(method), backbone, grid, task.mask,
                                task.observation, setup.dps_strength, prior, repl_seed);
                            out = tr.states.back();
                            nfe = tr.nfe;
                        }
                        EvalRow row;
                        row.task_id = id;
                        row.family = to_string(family);
                        row.method = method;
                        row.grid_steps = K;
                        row.nfe = nfe;
                        row.masked_mse = masked_mse(out, task);
                        row.masked_psnr = masked_psnr(out, task, setup.data_range);
                        row.seed = seed;
                        res.rows.push_back(std::move(row));
                    }
                }
            }
        }
    }

    // mean over tasks per seed, then mean +- std over seeds per cell
    std::map<std::tuple<std::string, std::string, int>,
             std::map<std::uint64_t, std::pair<std::vector<double>, std::vector<double>>>> cells;
    std::map<std::tuple<std::string, std::string, int>, int> cell_nfe;
    for (const EvalRow& r : res.rows) {
        auto key = std::make_tuple(r.method, r.family, r.grid_steps);
        cells[key][r.seed].first.push_back(r.masked_mse);
        cells[key][r.seed].second.push_back(r.masked_psnr);
        cell_nfe[key] = r.nfe;
    }
    for (const auto& [key, per_seed] : cells) {
        std::vector<double> mse_means, psnr_means;
        for (const auto& [s, vv] : per_seed) {
            double m, dummy;
            mean_std(vv.first, m, dummy);
            mse_means.push_back(m);
            mean_std(vv.second, m, dummy);
            psnr_means.push_back(m);
        }
        EvalCell cell;
        cell.method = std::get<0>(key);
        cell.family = std::get<1>(key);
        cell.grid_steps = std::get<2>(key);
        cell.nfe = cell_nfe[key];
        cell.seed_count = static_cast<int>(per_seed.size());
        mean_std(mse_means, cell.mse_mean, cell.mse_std);
        mean_std(psnr_means, cell.psnr_mean, cell.psnr_std);
        res.summary.push_back(std::move(cell));
    }
    return res;
}

inline void write_eval_rows(const std::string& path, const std::vector<EvalRow>& rows,
                            std::uint64_t config_hash) {
    CsvWriter w(path, {"task_id", "mask_family", "method", "K", "nfe", "masked_mse",
                       "masked_psnr", "seed", "config_hash"});
    for (const EvalRow& r : rows)
        w.write_row({std::to_string(r.task_id), r.family, r.method, std::to_string(r.grid_steps),
                     std::to_string(r.nfe), format_double(r.masked_mse),
                     format_double(r.masked_psnr), std::to_string(r.seed), hash_hex(config_hash)});
}

inline void write_eval_summary(const std::string& path, const std::vector<EvalCell>& cells,
                               std::uint64_t config_hash) {
    CsvWriter w(path, {"method", "mask_family", "K", "nfe", "masked_mse_mean", "masked_mse_std",
                       "masked_psnr_mean", "masked_psnr_std", "seeds", "config_hash"});
    for (const EvalCell& c : cells)
        w.write_row({c.method, c.family, std::to_string(c.grid_steps), std::to_string(c.nfe),
                     format_double(c.mse_mean), format_double(c.mse_std),
                     format_double(c.psnr_mean), format_double(c.psnr_std),
                     std::to_string(c.seed_count), hash_hex(config_hash)});
}

// Task manifest for reproducibility: how each evaluation task is derived.
inline void write_task_manifest(const std::string& path, const EvalSetup& setup,
                                std::uint64_t config_hash) {
    CsvWriter w(path, {"seed", "mask_family", "task_id", "stream", "height", "width",
                       "config_hash"});
    for (std::uint64_t seed : setup.seeds)
        for (std::size_t fi = 0; fi < setup.families.size(); ++fi)
            for (int id = 0; id < setup.task_count; ++id) {
                std::uint64_t uid = fi * static_cast<std::uint64_t>(setup.task_count) +
                                    static_cast<std::uint64_t>(id);
                w.write_row({std::to_string(seed), to_string(setup.families[fi]),
                             std::to_string(id), "evaltask/" + std::to_string(uid),
                             std::to_string(setup.height), std::to_string(setup.width),
                             hash_hex(config_hash)});
            }
}

// Linear-quadratic study problem: single-Gaussian backbone with a fixed
// mask, so the Riccati oracle supplies the exact optimal guidance.
struct LqSetup {
    ScoreBackbone backbone;
    Schedule sched;
    Mask mask;
    TerminalWeights weights;
    double beta = 1e-3;
    double lambda = 1e-3;
    int grid_steps = 18;
    int riccati_mesh = 2048;

    static LqSetup standard(int dimension = 4) {
        LqSetup s;
        Vec mean(static_cast<std::size_t>(dimension));
        for (int i = 0; i < dimension; ++i) mean[static_cast<std::size_t>(i)] = 0.4 * (i + 1);
        s.backbone = single_gaussian(mean, 0.25);
        s.mask.bits.assign(static_cast<std::size_t>(dimension), 0);
        for (int i = 0; i < dimension / 2; ++i) s.mask.bits[static_cast<std::size_t>(i)] = 1;
        return s;
    }
};

// Relative L2 error of the trained mean field against the Riccati optimal
// control, probed along deterministic deployment rollouts of fresh tasks.
inline double lq_mean_field_error(const GuidanceModule& mod, const LqSetup& setup,
                                  int probe_count = 256, std::uint64_t probe_seed = 1234) {
    if (setup.backbone.components() != 1)
        throw std::invalid_argument("lq error: backbone must be single-Gaussian");
    LqDynamics dyn = LqDynamics::from_backbone(setup.backbone, setup.sched, setup.grid_steps);
    TimeGrid grid = make_time_grid(setup.grid_steps, setup.sched);
    GuidanceNet actor(mod.actor_spec);
    NetWorkspace ws;

    double num = 0.0, den = 0.0;
    int probes = 0;
    for (std::uint64_t j = 0; probes < probe_count; ++j) {
        Rng task_rng = Rng::stream(probe_seed, "lqtask", j);
        Task task = sample_task_fixed_mask(setup.backbone, setup.mask, task_rng);
        RiccatiSolution oracle = lq_riccati_oracle(dyn, setup.weights, task.mask, task.observation,
                                                   setup.backbone, setup.beta, setup.riccati_mesh);
        Rng prior = Rng::stream(probe_seed, "lqprior", j);
        Trajectory traj = deploy(mod, setup.backbone, setup.sched, task.mask, task.observation,
                                 setup.grid_steps, prior);
        Vec xi = encode_xi(task.mask, task.observation);
        for (int k = 0; k < setup.grid_steps && probes < probe_count; ++k, ++probes) {
            double t = grid.times[static_cast<std::size_t>(k)];
            const Vec& x = traj.states[static_cast<std::size_t>(k)];
            Vec ustar = lq_optimal_control(oracle, t, x, setup.beta);
            Vec mu = actor.forward(mod.phi, grid.sigmas[static_cast<std::size_t>(k)], x, xi, ws);
            num += norm2(sub(mu, ustar));
            den += norm2(ustar);
        }
    }
    if (!(den > 0.0)) throw std::runtime_error("lq error: degenerate probe set");
    return std::sqrt(num / den);
}

struct LqTrainReport {
    GuidanceModule module;
    std::vector<TrainLogRow> log;
    double rel_l2_error = 0.0;
    int iterations_used = 0;
};

// Train on the LQ problem in chunks, stopping early once the probe error
// clears the target; chunking continues the run's sub-stream indexing so
// the trajectory stream is identical to one uninterrupted run.
inline LqTrainReport train_lq(const LqSetup& setup, int max_iterations, std::uint64_t train_seed,
                              double stop_below = 0.0, int check_every = 5000,
                              double critic_rate = 1e-4, double actor_rate = 1e-4) {
    PolicyConfig policy;
    policy.beta = setup.beta;
    policy.lambda = setup.lambda;
    policy.dimension = setup.backbone.dimension;

    LqTrainReport rep;
    Rng init = Rng::stream(train_seed, "init");
    rep.module = GuidanceModule::create(setup.backbone.dimension, policy, init);

    TrainConfig cfg;
    cfg.grid_steps = setup.grid_steps;
    cfg.critic_rate = critic_rate;
    cfg.actor_rate = actor_rate;
    cfg.weights = setup.weights;
    cfg.seed = train_seed;
    TaskSampler sampler = make_fixed_mask_task_sampler(setup.backbone, setup.mask);

    int done = 0;
    while (done < max_iterations) {
        int chunk = std::min(check_every, max_iterations - done);
        cfg.iterations = chunk;
        cfg.iteration_offset = done;
        std::vector<TrainLogRow> log = train(rep.module, setup.backbone, setup.sched, cfg, sampler);
        rep.log.insert(rep.log.end(), log.begin(), log.end());
        done += chunk;
        if (stop_below > 0.0) {
            rep.rel_l2_error = lq_mean_field_error(rep.module, setup);
            if (rep.rel_l2_error <= stop_below) break;
        }
    }
    if (!(stop_below > 0.0) || done >= max_iterations)
        rep.rel_l2_error = lq_mean_field_error(rep.module, setup);
    rep.iterations_used = done;
    return rep;
}

// One point of the x2 / /2 perturbation grid.
struct SweepPoint {
    std::string parameter;  // "default", "beta", "lambda", "alpha_vis", "alpha_hole"
    double factor = 1.0;
    double value = 0.0;
};

inline std::vector<SweepPoint> sweep_grid(double beta, double lambda, double alpha_vis,
                                          double alpha_hole) {
    std::vector<SweepPoint> pts;
    pts.push_back({"default", 1.0, 0.0});
    for (double f : {0.5, 2.0}) {
        pts.push_back({"beta", f, beta * f});
        pts.push_back({"lambda", f, lambda * f});
        pts.push_back({"alpha_vis", f, alpha_vis * f});
        pts.push_back({"alpha_hole", f, alpha_hole * f});
    }
    return pts;
}

inline LqSetup apply_sweep_point(const LqSetup& base, const SweepPoint& p) {
    LqSetup s = base;
    if (p.parameter == "beta") s.beta = p.value;
    else if (p.parameter == "lambda") s.lambda = p.value;
    else if (p.parameter == "alpha_vis") s.weights.alpha_vis = p.value;
    else if (p.parameter == "alpha_hole") s.weights.alpha_hole = p.value;
    else if (p.parameter != "default") throw std::invalid_argument("unknown sweep parameter: " + p.parameter);
    return s;
}

struct SweepRow {
    std::string parameter;
    double factor = 1.0;
    double value = 0.0;
    double metric = 0.0;  // LQ mode: relative L2 error; full mode: aid masked-MSE mean
    bool pass = true;
    int iterations = 0;
};

inline void write_sweep_rows(const std::string& path, const std::vector<SweepRow>& rows,
                             const std::string& metric_name, std::uint64_t config_hash) {
    CsvWriter w(path, {"parameter", "factor", "value", metric_name, "pass", "iterations",
                       "config_hash"});
    for (const SweepRow& r : rows)
        w.write_row({r.parameter, format_double(r.factor), format_double(r.value),
                     format_double(r.metric), r.pass ? "1" : "0", std::to_string(r.iterations),
                     hash_hex(config_hash)});
}

}  // namespace aid

#endif
