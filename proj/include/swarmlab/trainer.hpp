#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "swarmlab/comm.hpp"
#include "swarmlab/nn.hpp"
#include "swarmlab/policy.hpp"
#include "swarmlab/rng.hpp"
#include "swarmlab/world.hpp"

namespace swarmlab::trainer {

struct TrainConfig {
    int n_batch = 10;
    int ell = 6;
    int updates = 20000;
    int K_train = 10;
    int comm_size = 25;
    comm::InflowMode inflow_mode = comm::InflowMode::sum;
    std::vector<int> hidden = {32, 32};
    nn::Activation activation = nn::Activation::tanh;
    nn::AdamConfig adam;
    double grad_clip = 5.0;
    int eval_every = 1000;
    int eval_trials = 10;
    int checkpoint_every = 5000;
    bool eval_argmax = false;  // evaluation actions sampled by default
    policy::AssignmentObjective objective = policy::AssignmentObjective::bottleneck;
    bool reassign_every_step = true;
    std::uint64_t seed = 1;

    void validate() const;
};

// One received message on the tape: gradient of the receiver's inflow block
// recv_block flows to the sender's comm-head block sender_block at the
// previous step, scaled by weight.
struct InflowRoute {
    int sender = 0;
    int sender_block = 0;
    int recv_block = 0;
    double weight = 0.0;
};

struct AgentStepRecord {
    std::vector<double> obs;
    std::vector<double> inflow;  // flattened, exactly as fed to the network
    std::vector<InflowRoute> routes;
    int target = 0;  // centralized-policy one-hot index
    int action = 0;  // sampled action
    nn::ForwardRecord fwd;
};

// Recorded forward pass of one simulation over an ell-step window. Routing on
// the tape is exactly the routing executed in the rollout; positions are kept
// so tests can replay the group assignment.
struct WindowTape {
    int K = 0;
    int ell = 0;
    int window_start_t = 1;  // global step index of the first window step
    std::vector<std::vector<AgentStepRecord>> steps;     // [tau][agent]
    std::vector<std::vector<geom::Vec2>> positions;      // [tau][agent]
};

// One live training simulation; restarted with a fresh seed whenever it
// converges or exceeds the step budget.
class SimWorker {
  public:
    SimWorker(world::Task task, const world::WorldConfig& cfg, std::uint64_t master_seed,
              std::uint64_t sim_id);

    // Respawns if the episode converged or ran past L. Called at window start
    // so a tape never spans a restart.
    void ensure_live();

    WindowTape rollout(const nn::PolicyParams& params, const TrainConfig& tcfg);

    const world::TaskInstance& instance() const { return inst_; }
    int t() const { return t_; }

  private:
    void respawn();

    world::Task task_;
    world::WorldConfig cfg_;
    std::uint64_t master_seed_;
    std::uint64_t sim_id_;
    std::uint64_t episode_ = 0;
    world::TaskInstance inst_;
    comm::CommState comm_;
    Rng rng_;
    int t_ = 1;
};

std::vector<int> oracle_targets(world::Task task, const world::TaskInstance& inst,
                                const world::WorldConfig& cfg, const TrainConfig& tcfg);

struct BpttResult {
    double loss = 0.0;   // (1/(K*ell)) * sum of per-record cross entropies
    int agree = 0;       // records where argmax q == target
    int records = 0;
};

// Reverse pass through the recorded window: cross-entropy gradients enter
// every agent-step's action head; inflow gradients propagate to the senders'
// comm heads one step earlier via the recorded routes. Parameter gradients
// are accumulated into grads scaled by 1/(K*ell).
BpttResult bptt(const WindowTape& tape, const nn::PolicyParams& params, nn::Gradients& grads);

// Recomputes the truncated window objective for given parameters over the
// tape's fixed topology (observations, routes, targets); the quantity bptt
// differentiates. Window-entry inflow is a constant.
double window_loss(const WindowTape& tape, const nn::PolicyParams& params);

struct UpdateStats {
    int update = 0;
    double loss = 0.0;
    double agreement = 0.0;
    double grad_norm = 0.0;
    std::optional<double> eval_cr;
    std::optional<double> eval_mean_t;
};

struct TrainResult {
    nn::PolicyParams params;
    std::filesystem::path checkpoint_path;  // empty if out_dir not set
    std::vector<UpdateStats> history;
};

using TrainCallback = std::function<void(const UpdateStats&)>;

// Supervised truncated BPTT against the centralized policy:
// rollout_window -> bptt -> adam_step, with metrics/checkpoints written under
// out_dir when given. Throws Diverged if the loss becomes non-finite.
TrainResult train(world::Task task, const world::WorldConfig& cfg, const TrainConfig& tcfg,
                  const std::filesystem::path& out_dir = {}, int workers = 1,
                  const TrainCallback& callback = {});

nn::PolicySpec make_policy_spec(world::Task task, const world::WorldConfig& cfg,
                                const TrainConfig& tcfg);

}  // namespace swarmlab::trainer
