#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swarmlab/geometry.hpp"

namespace swarmlab::world {

enum class Task { rendezvous, assignment };

struct AgentState {
    geom::Vec2 pos;
    geom::Vec2 vel;
};

struct PotentialField {
    bool enabled = false;
    double repulse_radius = 0.4;
    double repulse_gain = 1.0;
};

struct WorldConfig {
    int K = 10;
    double d_lim = 2.0;
    double dt = 0.1;
    double kp = 4.0;
    double kd = 4.0;
    double epsilon = 1.4;
    int L = 300;
    double density = 10.0 / 36.0;  // agents per unit area of the spawn disk
    geom::Discretization disc;
    PotentialField potential_field;
    int spawn_max_attempts = 10000;

    void validate() const;  // throws ConfigMismatch
};

struct ConnectivityGraph {
    int K = 0;
    int T = 0;
    std::vector<std::uint8_t> adj;         // K*K, symmetric, zero diagonal
    std::vector<std::uint8_t> target_vis;  // K*T agent->target visibility

    bool connected(int i, int j) const { return adj[static_cast<std::size_t>(i) * K + j] != 0; }
    bool sees_target(int i, int j) const {
        return target_vis[static_cast<std::size_t>(i) * T + j] != 0;
    }
    std::vector<int> neighbours(int i) const;
    int degree(int i) const;
};

// Discretized local observation: P neighbour counts for rendezvous; for the
// assignment task, P neighbour counts then P covered-target counts then P
// uncovered-target counts.
using Observation = std::vector<int>;

struct TaskInstance {
    std::vector<AgentState> agents;
    std::vector<geom::Vec2> targets;         // empty for rendezvous
    std::vector<std::uint8_t> covered_mask;  // per target

    int K() const { return static_cast<int>(agents.size()); }
};

// Agents sampled uniformly in a disk sized for constant density, rejection
// sampled until the visibility graph is connected. Deterministic per seed.
TaskInstance spawn_rendezvous(const WorldConfig& cfg, std::uint64_t seed);

// As above plus K target points: agent graph connected, target graph
// connected, and at least one agent sees at least one target.
TaskInstance spawn_assignment(const WorldConfig& cfg, std::uint64_t seed);

ConnectivityGraph connectivity(const TaskInstance& inst, const WorldConfig& cfg);

Observation observe(const TaskInstance& inst, const ConnectivityGraph& graph, int agent,
                    const WorldConfig& cfg);

// One PD-controlled double-integrator step (semi-implicit Euler). Setpoints
// are desired positions relative to each agent. Recomputes covered_mask.
void step(TaskInstance& inst, std::span<const geom::Vec2> setpoints, const WorldConfig& cfg);

bool rendezvous_done(const TaskInstance& inst, const WorldConfig& cfg);
bool assignment_done(const TaskInstance& inst);
bool task_done(Task task, const TaskInstance& inst, const WorldConfig& cfg);

double max_pairwise_distance(const TaskInstance& inst);
void recompute_covered(TaskInstance& inst, const WorldConfig& cfg);

TaskInstance spawn(Task task, const WorldConfig& cfg, std::uint64_t seed);

}  // namespace swarmlab::world
