#include "swarmlab/eval.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "swarmlab/errors.hpp"
#include "swarmlab/parallel.hpp"
#include "swarmlab/rng.hpp"

namespace swarmlab::eval {

namespace {

using nlohmann::json;

json vec2_list(const std::vector<world::AgentState>& agents, bool velocities) {
    json arr = json::array();
    for (const auto& a : agents) {
        const geom::Vec2& v = velocities ? a.vel : a.pos;
        arr.push_back(json::array({v.x, v.y}));
    }
    return arr;
}

void write_step_record(std::ostream& out, int t, const world::TaskInstance& inst,
                       const std::vector<int>& actions, bool done) {
    json j;
    j["t"] = t;
    j["positions"] = vec2_list(inst.agents, false);
    j["velocities"] = vec2_list(inst.agents, true);
    j["actions"] = actions;
    j["covered_mask"] = std::vector<int>(inst.covered_mask.begin(), inst.covered_mask.end());
    j["done"] = done;
    out << j.dump() << '\n';
}

}  // namespace

EpisodeOutcome run_episode(world::Task task, const world::WorldConfig& cfg,
                           policy::Controller& controller, std::uint64_t seed,
                           std::ostream* traj) {
    auto inst = world::spawn(task, cfg, Rng::derive(seed, 0x59A3));
    Rng rng(Rng::derive(seed, 0xAC71));
    controller.reset(inst);
    auto offsets = geom::action_offsets(cfg.disc);

    for (int t = 1; t <= cfg.L; ++t) {
        if (world::task_done(task, inst, cfg)) {
            if (traj) write_step_record(*traj, t, inst, {}, true);
            return {true, t};
        }
        auto graph = world::connectivity(inst, cfg);
        auto actions = controller.act(inst, graph, cfg, rng);
        if (traj) write_step_record(*traj, t, inst, actions, false);
        std::vector<geom::Vec2> setpoints(actions.size());
        for (std::size_t i = 0; i < actions.size(); ++i) setpoints[i] = offsets[actions[i]];
        world::step(inst, setpoints, cfg);
    }
    return {false, 0};
}

TrialSet run_trials(world::Task task, const world::WorldConfig& cfg,
                    const ControllerFactory& factory, int n_tot, std::uint64_t base_seed,
                    int workers, const std::string& policy_name) {
    TrialSet set;
    set.trials.resize(n_tot);
    parallel_for(n_tot, workers, [&](int idx) {
        auto controller = factory();
        auto outcome = run_episode(task, cfg, *controller,
                                   Rng::derive(base_seed, static_cast<std::uint64_t>(idx)));
        set.trials[idx] = {policy_name, cfg.K, static_cast<std::uint64_t>(idx),
                           outcome.converged, outcome.t_metric};
    });
    set.summary.n_tot = n_tot;
    double sum_t = 0.0;
    for (const auto& tr : set.trials) {
        if (tr.converged) {
            ++set.summary.n_success;
            sum_t += tr.t_metric;
        }
    }
    set.summary.cr_percent = 100.0 * set.summary.n_success / std::max(n_tot, 1);
    if (set.summary.n_success > 0) set.summary.mean_t = sum_t / set.summary.n_success;
    return set;
}

namespace {

std::string policy_file_tag(const std::string& spec) {
    auto colon = spec.find(':');
    return colon == std::string::npos ? spec : spec.substr(0, colon);
}

std::string task_name(world::Task task) {
    return task == world::Task::rendezvous ? "rendezvous" : "assignment";
}

}  // namespace

std::vector<CompareRow> compare(world::Task task, const world::WorldConfig& cfg,
                                const std::vector<std::string>& policies,
                                const std::vector<int>& K_list,
                                const std::filesystem::path& out_dir,
                                const CompareOptions& opts) {
    std::filesystem::create_directories(out_dir);
    std::vector<CompareRow> rows;
    for (const auto& spec : policies) {
        for (int K : K_list) {
            world::WorldConfig wc = cfg;
            wc.K = K;
            auto factory = [&]() {
                return policy::make_controller(spec, task, wc, opts.objective,
                                               opts.reassign_every_step, opts.argmax);
            };
            std::string tag = policy_file_tag(spec);
            auto set = run_trials(task, wc, factory, opts.n_trials, opts.base_seed,
                                  opts.workers, tag);

            std::ofstream csv(out_dir / (task_name(task) + "_" + tag + "_" +
                                         std::to_string(K) + ".csv"));
            csv << "seed,converged,t\n";
            for (const auto& tr : set.trials)
                csv << tr.seed_index << ',' << (tr.converged ? 1 : 0) << ','
                    << (tr.converged ? std::to_string(tr.t_metric) : "") << '\n';

            rows.push_back({tag, K, set.summary});
        }
    }

    std::ofstream csv(out_dir / "comparison.csv");
    csv << "task,policy,K,n_trials,n_success,cr_percent,mean_t\n";
    std::ofstream jsonl(out_dir / "comparison.jsonl");
    for (const auto& row : rows) {
        csv << task_name(task) << ',' << row.policy << ',' << row.K << ','
            << row.summary.n_tot << ',' << row.summary.n_success << ','
            << row.summary.cr_percent << ','
            << (row.summary.mean_t ? std::to_string(*row.summary.mean_t) : "") << '\n';
        json j{{"task", task_name(task)},
               {"policy", row.policy},
               {"K", row.K},
               {"n_trials", row.summary.n_tot},
               {"n_success", row.summary.n_success},
               {"cr_percent", row.summary.cr_percent}};
        if (row.summary.mean_t) j["mean_t"] = *row.summary.mean_t;
        jsonl << j.dump() << '\n';
    }
    return rows;
}

SweepGrid comm_sweep(const nn::PolicyParams& params, const geom::Discretization& disc,
                     double c_min, double c_max, int resolution,
                     const std::vector<int>* obs_override) {
    const auto& spec = params.spec;
    if (spec.comm_size != 2 || spec.inflow_mode != comm::InflowMode::sum)
        throw ConfigMismatch("comm sweep needs a size-2, sum-inflow policy");
    if (spec.P != disc.P || spec.obs_dim != disc.P)
        throw ConfigMismatch("comm sweep checkpoint does not match the discretization");
    if (resolution < 2) throw ConfigMismatch("comm sweep resolution must be >= 2");

    std::vector<int> obs(disc.P, 0);
    if (obs_override) {
        if (static_cast<int>(obs_override->size()) != disc.P)
            throw ConfigMismatch("comm sweep observation length must be P");
        obs = *obs_override;
    } else {
        if (disc.sectors() % 2 != 0)
            throw ConfigMismatch("default sweep observation needs an even sector count");
        obs[1] = 1;
        obs[1 + disc.sectors() / 2] = 1;  // opposite sector
    }
    std::vector<double> obs_d(obs.begin(), obs.end());

    SweepGrid grid;
    grid.c_min = c_min;
    grid.c_max = c_max;
    grid.resolution = resolution;
    grid.axis.resize(resolution);
    for (int i = 0; i < resolution; ++i)
        grid.axis[i] = c_min + (c_max - c_min) * i / (resolution - 1);
    grid.prob.assign(spec.P, std::vector<double>(static_cast<std::size_t>(resolution) *
                                                 resolution));

    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            std::vector<double> inflow = {grid.axis[i], grid.axis[j]};
            auto res = nn::forward(params, obs_d, inflow);
            auto q = nn::softmax(res.logits);
            for (int p = 0; p < spec.P; ++p)
                grid.prob[p][static_cast<std::size_t>(i) * resolution + j] = q[p];
        }
    }

    // Mean surface gradient per action vs. the direction opposite its offset.
    auto offsets = geom::action_offsets(disc);
    grid.trend_cosine.assign(spec.P, 0.0);
    double h = grid.axis[1] - grid.axis[0];
    for (int p = 1; p < spec.P; ++p) {
        double gx = 0.0, gy = 0.0;
        int cells = 0;
        for (int i = 1; i + 1 < resolution; ++i) {
            for (int j = 1; j + 1 < resolution; ++j) {
                auto at = [&](int a, int b) {
                    return grid.prob[p][static_cast<std::size_t>(a) * resolution + b];
                };
                gx += (at(i + 1, j) - at(i - 1, j)) / (2.0 * h);
                gy += (at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
                ++cells;
            }
        }
        gx /= cells;
        gy /= cells;
        double gn = std::sqrt(gx * gx + gy * gy);
        geom::Vec2 dir = offsets[p] * (1.0 / offsets[p].norm());
        if (gn > 0.0)
            grid.trend_cosine[p] = (gx * -dir.x + gy * -dir.y) / gn;
    }
    return grid;
}

void write_sweep(const std::filesystem::path& out_dir, const SweepGrid& grid) {
    std::filesystem::create_directories(out_dir);
    for (std::size_t p = 0; p < grid.prob.size(); ++p) {
        std::ofstream csv(out_dir / ("sweep_action_" + std::to_string(p) + ".csv"));
        for (int i = 0; i < grid.resolution; ++i) {
            for (int j = 0; j < grid.resolution; ++j) {
                if (j) csv << ',';
                csv << grid.prob[p][static_cast<std::size_t>(i) * grid.resolution + j];
            }
            csv << '\n';
        }
    }
    json j{{"c_min", grid.c_min},
           {"c_max", grid.c_max},
           {"resolution", grid.resolution},
           {"trend_cosine", grid.trend_cosine}};
    std::ofstream out(out_dir / "sweep_trend.json");
    out << j.dump(2) << '\n';
}

std::vector<SizeStudyRow> comm_size_study(world::Task task, const world::WorldConfig& cfg,
                                          const trainer::TrainConfig& base,
                                          const std::vector<int>& sizes, int n_trials,
                                          const std::filesystem::path& out_dir,
                                          int workers) {
    std::filesystem::create_directories(out_dir);
    std::vector<SizeStudyRow> rows;
    for (int n : sizes) {
        trainer::TrainConfig tcfg = base;
        tcfg.comm_size = n;
        tcfg.seed = Rng::derive(base.seed, 0xC0515 + static_cast<std::uint64_t>(n));
        auto dir = out_dir / ("n" + std::to_string(n));
        auto trained = trainer::train(task, cfg, tcfg, dir, workers);

        world::WorldConfig wc = cfg;
        wc.K = tcfg.K_train;
        policy::LearnedControllerOptions opts;
        opts.argmax = tcfg.eval_argmax;
        auto factory = [&]() {
            return policy::make_learned_controller(trained.params, opts);
        };
        auto set = run_trials(task, wc, factory, n_trials,
                              Rng::derive(base.seed, 0x57D1), workers, "learned");
        rows.push_back({n, set.summary, trained.checkpoint_path});
    }

    std::ofstream csv(out_dir / "comm_size_study.csv");
    csv << "comm_size,n_trials,n_success,cr_percent,mean_t\n";
    std::ofstream jsonl(out_dir / "comm_size_study.jsonl");
    for (const auto& row : rows) {
        csv << row.comm_size << ',' << row.summary.n_tot << ',' << row.summary.n_success << ','
            << row.summary.cr_percent << ','
            << (row.summary.mean_t ? std::to_string(*row.summary.mean_t) : "") << '\n';
        json j{{"comm_size", row.comm_size},
               {"n_trials", row.summary.n_tot},
               {"n_success", row.summary.n_success},
               {"cr_percent", row.summary.cr_percent}};
        if (row.summary.mean_t) j["mean_t"] = *row.summary.mean_t;
        jsonl << j.dump() << '\n';
    }
    return rows;
}

}  // namespace swarmlab::eval
