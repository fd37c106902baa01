#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "swarmlab/comm.hpp"
#include "swarmlab/nn.hpp"
#include "swarmlab/rng.hpp"
#include "swarmlab/world.hpp"

namespace swarmlab::policy {

struct ActionDistribution {
    std::vector<double> probs;

    int argmax() const;
};

ActionDistribution one_hot(int P, int index);

// Index of the offset nearest to target; ties go to the lowest component.
int nearest_offset(geom::Vec2 target, std::span<const geom::Vec2> offsets);

// Snapshot of the full simulation in the global frame, the centralized
// policies' input.
struct GlobalState {
    std::vector<geom::Vec2> positions;
    std::vector<geom::Vec2> targets;

    static GlobalState from(const world::TaskInstance& inst);
};

// Centralized rendezvous policy: every agent one-hot toward the offset
// nearest to the smallest-enclosing-circle center of all agents.
std::vector<ActionDistribution> oracle_rendezvous(const GlobalState& state,
                                                  const geom::Discretization& disc);

// Distributed baselines; both communicate nothing.
ActionDistribution circumcenter_law(std::span<const geom::Vec2> rel_neighbours,
                                    const geom::Discretization& disc);
ActionDistribution averaging_law(std::span<const geom::Vec2> rel_neighbours,
                                 const geom::Discretization& disc);

struct Assignment {
    std::vector<int> target_of;  // agent index -> target index, bijective
    double bottleneck = 0.0;     // max assigned agent-target distance
};

enum class AssignmentObjective { bottleneck, sum };

// Perfect matching minimizing the maximum agent-target distance (binary
// search over distances + bipartite matching feasibility), sum-minimal among
// optimal-bottleneck matchings. The sum objective runs a plain Hungarian
// solve on raw distances instead.
Assignment bottleneck_assignment(std::span<const geom::Vec2> agents,
                                 std::span<const geom::Vec2> targets,
                                 AssignmentObjective objective = AssignmentObjective::bottleneck);

// Centralized assignment policy: one-hot toward the assigned target; agents
// within epsilon of their target hold the central component.
std::vector<ActionDistribution> oracle_assignment(const GlobalState& state,
                                                  const Assignment& assignment,
                                                  const geom::Discretization& disc,
                                                  double epsilon);

struct LearnedOutput {
    ActionDistribution dist;
    comm::CommBundle outflow;  // concat-structured, P groups (empty when comm_size = 0)
};

// Adapter over the policy network: softmaxed action head plus the comm head
// arranged as a P-group bundle (broadcast in sum mode).
LearnedOutput learned_policy(const world::Observation& obs, const comm::CommBundle& inflow,
                             const nn::PolicyParams& params);

// ---------------------------------------------------------------------------
// Episode-level decision makers. One controller instance drives one episode;
// act() returns a component index per agent for the current step.

class Controller {
  public:
    virtual ~Controller() = default;
    virtual void reset(const world::TaskInstance& inst) { (void)inst; }
    virtual std::vector<int> act(const world::TaskInstance& inst,
                                 const world::ConnectivityGraph& graph,
                                 const world::WorldConfig& cfg, Rng& rng) = 0;
};

struct LearnedControllerOptions {
    bool comm_enabled = true;  // false forces zero inflow and drops outflow
    bool argmax = false;       // sample from the distribution otherwise
};

std::unique_ptr<Controller> make_oracle_controller(world::Task task,
                                                   AssignmentObjective objective,
                                                   bool reassign_every_step);
std::unique_ptr<Controller> make_circumcenter_controller();
std::unique_ptr<Controller> make_averaging_controller();
std::unique_ptr<Controller> make_stay_controller();
std::unique_ptr<Controller> make_learned_controller(nn::PolicyParams params,
                                                    LearnedControllerOptions opts = {});

// Parses "oracle" | "circumcenter" | "averaging" | "stay" |
// "learned:<checkpoint>" | "learned-nocomm:<checkpoint>". Throws
// CheckpointNotFound / ConfigMismatch.
std::unique_ptr<Controller> make_controller(const std::string& spec, world::Task task,
                                            const world::WorldConfig& cfg,
                                            AssignmentObjective objective,
                                            bool reassign_every_step, bool argmax);

}  // namespace swarmlab::policy
