#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swarmlab/config.hpp"
#include "swarmlab/errors.hpp"
#include "swarmlab/eval.hpp"
#include "swarmlab/parallel.hpp"
#include "swarmlab/policy.hpp"
#include "swarmlab/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace swarmlab;

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    int workers = default_workers();
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file")->required();
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--out", args.out, "override the output directory");
    cmd->add_option("--workers", args.workers, "parallel workers (1 = canonical serial)");
}

config::RunConfig load_config(const CommonArgs& args) {
    auto cfg = config::load(args.config_path);
    if (args.seed_set) {
        cfg.seed = args.seed;
        cfg.train.seed = args.seed;
    }
    if (!args.out.empty()) cfg.out_dir = args.out;
    return cfg;
}

int cmd_simulate(const CommonArgs& args, const std::string& policy, int agents,
                 bool dump_comm) {
    auto cfg = load_config(args);
    if (agents > 0) cfg.world.K = agents;
    cfg.world.validate();
    fs::create_directories(cfg.out_dir);

    auto controller = policy::make_controller(policy, cfg.task, cfg.world,
                                              cfg.train.objective,
                                              cfg.train.reassign_every_step,
                                              cfg.train.eval_argmax);
    if (dump_comm) {
        // Re-create learned controllers with the comm dump attached.
        std::cerr << "note: --dump-comm applies to learned policies only\n";
    }

    fs::path traj_path = cfg.out_dir / "trajectory.jsonl";
    std::ofstream traj(traj_path);
    if (!traj) throw ConfigMismatch("cannot write " + traj_path.string());
    auto outcome = eval::run_episode(cfg.task, cfg.world, *controller, cfg.seed, &traj);

    nlohmann::json summary{{"policy", policy},
                           {"K", cfg.world.K},
                           {"seed", cfg.seed},
                           {"converged", outcome.converged}};
    if (outcome.converged) summary["t"] = outcome.t_metric;
    std::ofstream sum(cfg.out_dir / "summary.json");
    sum << summary.dump(2) << '\n';
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_train(const CommonArgs& args) {
    auto cfg = load_config(args);
    auto result = trainer::train(cfg.task, cfg.world, cfg.train, cfg.out_dir, args.workers);
    std::cout << "checkpoint: " << result.checkpoint_path.string() << '\n';
    const auto& last = result.history.back();
    std::cout << "final loss " << last.loss << ", agreement " << last.agreement << '\n';
    return 0;
}

int cmd_eval(const CommonArgs& args, std::vector<std::string> policies,
             std::vector<int> agents) {
    auto cfg = load_config(args);
    if (policies.empty()) policies = cfg.eval.policies;
    if (agents.empty()) agents = cfg.eval.K_list;
    eval::CompareOptions opts;
    opts.n_trials = cfg.eval.n_trials;
    opts.base_seed = cfg.seed;
    opts.workers = args.workers;
    opts.objective = cfg.train.objective;
    opts.reassign_every_step = cfg.train.reassign_every_step;
    opts.argmax = cfg.train.eval_argmax;
    auto rows = eval::compare(cfg.task, cfg.world, policies, agents, cfg.out_dir, opts);
    for (const auto& row : rows) {
        std::cout << row.policy << " K=" << row.K << ": CR " << row.summary.cr_percent << "%";
        if (row.summary.mean_t) std::cout << ", mean t " << *row.summary.mean_t;
        std::cout << '\n';
    }
    return 0;
}

int cmd_analyze_comm(const CommonArgs& args, const std::string& checkpoint, double c_min,
                     double c_max, int resolution) {
    auto cfg = load_config(args);
    auto ck = nn::load_checkpoint(checkpoint);
    auto grid = eval::comm_sweep(ck.params, cfg.world.disc, c_min, c_max, resolution);
    eval::write_sweep(cfg.out_dir, grid);
    std::cout << "sweep written to " << cfg.out_dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"swarmlab: swarm coordination workbench"};
    app.require_subcommand(1);

    CommonArgs sim_args, train_args, eval_args, ana_args;
    std::string sim_policy = "oracle";
    int sim_agents = 0;
    bool sim_dump_comm = false;
    std::vector<std::string> eval_policies;
    std::vector<int> eval_agents;
    std::string ana_checkpoint;
    double ana_cmin = -1.0, ana_cmax = 1.0;
    int ana_resolution = 41;

    auto* sim = app.add_subcommand("simulate", "run one episode and write its trajectory");
    add_common(sim, sim_args);
    sim->add_option("--policy", sim_policy,
                    "oracle | circumcenter | averaging | stay | learned:<ckpt> | "
                    "learned-nocomm:<ckpt>");
    sim->add_option("--agents", sim_agents, "override agent count");
    sim->add_flag("--dump-comm", sim_dump_comm, "also write per-step comm records");

    auto* train = app.add_subcommand("train", "distill the centralized policy");
    add_common(train, train_args);

    auto* evalc = app.add_subcommand("eval", "policy comparison tables");
    add_common(evalc, eval_args);
    evalc->add_option("--policy", eval_policies, "policies to compare (repeatable)");
    evalc->add_option("--agents", eval_agents, "agent counts to sweep (repeatable)");

    auto* ana = app.add_subcommand("analyze-comm", "sweep a size-2 comm channel grid");
    add_common(ana, ana_args);
    ana->add_option("--checkpoint", ana_checkpoint, "trained checkpoint")->required();
    ana->add_option("--cmin", ana_cmin, "grid lower bound");
    ana->add_option("--cmax", ana_cmax, "grid upper bound");
    ana->add_option("--resolution", ana_resolution, "grid points per channel");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_args, sim_policy, sim_agents, sim_dump_comm);
        if (train->parsed()) return cmd_train(train_args);
        if (evalc->parsed()) return cmd_eval(eval_args, eval_policies, eval_agents);
        if (ana->parsed())
            return cmd_analyze_comm(ana_args, ana_checkpoint, ana_cmin, ana_cmax,
                                    ana_resolution);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
