#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "swarmlab/policy.hpp"
#include "swarmlab/trainer.hpp"
#include "swarmlab/world.hpp"

namespace swarmlab::eval {

struct TrialResult {
    std::string policy;
    int K = 0;
    std::uint64_t seed_index = 0;
    bool converged = false;
    int t_metric = 0;  // valid only when converged
};

// Mean t is taken over the converged subset only and is absent when that
// subset is empty.
struct TrialSummary {
    int n_tot = 0;
    int n_success = 0;
    double cr_percent = 0.0;
    std::optional<double> mean_t;
};

struct TrialSet {
    std::vector<TrialResult> trials;
    TrialSummary summary;
};

struct EpisodeOutcome {
    bool converged = false;
    int t_metric = 0;
};

// Runs one episode to convergence or the L-step budget; optionally streams
// one JSON-lines record per step to traj.
EpisodeOutcome run_episode(world::Task task, const world::WorldConfig& cfg,
                           policy::Controller& controller, std::uint64_t seed,
                           std::ostream* traj = nullptr);

using ControllerFactory = std::function<std::unique_ptr<policy::Controller>()>;

TrialSet run_trials(world::Task task, const world::WorldConfig& cfg,
                    const ControllerFactory& factory, int n_tot, std::uint64_t base_seed,
                    int workers = 1, const std::string& policy_name = "");

struct CompareOptions {
    int n_trials = 25;
    std::uint64_t base_seed = 1;
    int workers = 1;
    policy::AssignmentObjective objective = policy::AssignmentObjective::bottleneck;
    bool reassign_every_step = true;
    bool argmax = false;
};

struct CompareRow {
    std::string policy;
    int K = 0;
    TrialSummary summary;
};

// Head-to-head table over (policy, K); writes one per-trial CSV per cell
// ({task}_{policy}_{K}.csv) plus comparison.csv / comparison.jsonl under
// out_dir.
std::vector<CompareRow> compare(world::Task task, const world::WorldConfig& cfg,
                                const std::vector<std::string>& policies,
                                const std::vector<int>& K_list,
                                const std::filesystem::path& out_dir,
                                const CompareOptions& opts);

struct SweepGrid {
    double c_min = -1.0;
    double c_max = 1.0;
    int resolution = 0;
    std::vector<double> axis;               // grid coordinates, both channels
    std::vector<std::vector<double>> prob;  // [P][res*res], row-major in (c1, c2)
    std::vector<double> trend_cosine;       // per action: cos(mean surface gradient,
                                            // direction opposite the action offset)
};

// Evaluates a size-2, sum-inflow policy on a (c1, c2) grid with the
// observation held fixed (default: one neighbour each in two opposite
// sectors). Throws ConfigMismatch for incompatible checkpoints.
SweepGrid comm_sweep(const nn::PolicyParams& params, const geom::Discretization& disc,
                     double c_min, double c_max, int resolution,
                     const std::vector<int>* obs_override = nullptr);

void write_sweep(const std::filesystem::path& out_dir, const SweepGrid& grid);

struct SizeStudyRow {
    int comm_size = 0;
    TrialSummary summary;
    std::filesystem::path checkpoint;
};

// Trains one policy per communication size under a shared budget and
// evaluates each; writes comm_size_study.csv / .jsonl under out_dir.
std::vector<SizeStudyRow> comm_size_study(world::Task task, const world::WorldConfig& cfg,
                                          const trainer::TrainConfig& base,
                                          const std::vector<int>& sizes, int n_trials,
                                          const std::filesystem::path& out_dir,
                                          int workers = 1);

}  // namespace swarmlab::eval
