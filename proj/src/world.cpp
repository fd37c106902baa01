#include "swarmlab/world.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "swarmlab/errors.hpp"
#include "swarmlab/rng.hpp"

namespace swarmlab::world {

namespace {

constexpr double kMaxRepulseAccel = 50.0;

std::vector<geom::Vec2> sample_disk(int n, double radius, Rng& rng) {
    std::vector<geom::Vec2> pts(n);
    for (auto& p : pts) {
        double r = radius * std::sqrt(rng.uniform());
        double a = 2.0 * M_PI * rng.uniform();
        p = {r * std::cos(a), r * std::sin(a)};
    }
    return pts;
}

bool points_connected(const std::vector<geom::Vec2>& pts, double d_lim) {
    int n = static_cast<int>(pts.size());
    if (n <= 1) return true;
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int i = q.front();
        q.pop();
        for (int j = 0; j < n; ++j) {
            if (!seen[j] && geom::distance(pts[i], pts[j]) <= d_lim) {
                seen[j] = 1;
                ++count;
                q.push(j);
            }
        }
    }
    return count == n;
}

double spawn_radius(const WorldConfig& cfg) {
    return std::sqrt(cfg.K / (M_PI * cfg.density));
}

}  // namespace

void WorldConfig::validate() const {
    if (K < 1) throw ConfigMismatch("world.K must be >= 1");
    if (!(dt > 0.0)) throw ConfigMismatch("world.dt must be > 0");
    if (!(kp > 0.0) || !(kd > 0.0)) throw ConfigMismatch("world gains must be > 0");
    if (!(epsilon > 0.0) || epsilon >= d_lim)
        throw ConfigMismatch("world.epsilon must satisfy 0 < epsilon < d_lim");
    if (L < 1) throw ConfigMismatch("world.L must be >= 1");
    if (!(density > 0.0)) throw ConfigMismatch("world.density must be > 0");
    if (!disc.valid()) throw ConfigMismatch("discretization invalid (need P >= 2, 0 < inner_radius < d_lim)");
    if (potential_field.enabled && potential_field.repulse_radius >= d_lim)
        throw ConfigMismatch("potential_field.repulse_radius must be < d_lim");
}

std::vector<int> ConnectivityGraph::neighbours(int i) const {
    std::vector<int> out;
    for (int j = 0; j < K; ++j)
        if (connected(i, j)) out.push_back(j);
    return out;
}

int ConnectivityGraph::degree(int i) const {
    int d = 0;
    for (int j = 0; j < K; ++j)
        if (connected(i, j)) ++d;
    return d;
}

TaskInstance spawn_rendezvous(const WorldConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    double R = spawn_radius(cfg);
    for (int attempt = 0; attempt < cfg.spawn_max_attempts; ++attempt) {
        auto pts = sample_disk(cfg.K, R, rng);
        if (!points_connected(pts, cfg.d_lim)) continue;
        TaskInstance inst;
        inst.agents.resize(cfg.K);
        for (int i = 0; i < cfg.K; ++i) inst.agents[i].pos = pts[i];
        return inst;
    }
    throw SpawnFailed("rendezvous spawn: no connected layout within attempt budget");
}

TaskInstance spawn_assignment(const WorldConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    double R = spawn_radius(cfg);
    for (int attempt = 0; attempt < cfg.spawn_max_attempts; ++attempt) {
        auto agents = sample_disk(cfg.K, R, rng);
        auto targets = sample_disk(cfg.K, R, rng);
        if (!points_connected(agents, cfg.d_lim)) continue;
        if (!points_connected(targets, cfg.d_lim)) continue;
        bool any_visible = false;
        for (int i = 0; i < cfg.K && !any_visible; ++i)
            for (int j = 0; j < cfg.K && !any_visible; ++j)
                if (geom::distance(agents[i], targets[j]) <= cfg.d_lim) any_visible = true;
        if (!any_visible) continue;
        TaskInstance inst;
        inst.agents.resize(cfg.K);
        for (int i = 0; i < cfg.K; ++i) inst.agents[i].pos = agents[i];
        inst.targets = std::move(targets);
        recompute_covered(inst, cfg);
        return inst;
    }
    throw SpawnFailed("assignment spawn: constraints not met within attempt budget");
}

TaskInstance spawn(Task task, const WorldConfig& cfg, std::uint64_t seed) {
    return task == Task::rendezvous ? spawn_rendezvous(cfg, seed) : spawn_assignment(cfg, seed);
}

ConnectivityGraph connectivity(const TaskInstance& inst, const WorldConfig& cfg) {
    ConnectivityGraph g;
    g.K = inst.K();
    g.T = static_cast<int>(inst.targets.size());
    g.adj.assign(static_cast<std::size_t>(g.K) * g.K, 0);
    g.target_vis.assign(static_cast<std::size_t>(g.K) * g.T, 0);
    for (int i = 0; i < g.K; ++i) {
        for (int j = i + 1; j < g.K; ++j) {
            if (geom::distance(inst.agents[i].pos, inst.agents[j].pos) <= cfg.d_lim) {
                g.adj[static_cast<std::size_t>(i) * g.K + j] = 1;
                g.adj[static_cast<std::size_t>(j) * g.K + i] = 1;
            }
        }
        for (int j = 0; j < g.T; ++j) {
            if (geom::distance(inst.agents[i].pos, inst.targets[j]) <= cfg.d_lim)
                g.target_vis[static_cast<std::size_t>(i) * g.T + j] = 1;
        }
    }
    return g;
}

Observation observe(const TaskInstance& inst, const ConnectivityGraph& graph, int agent,
                    const WorldConfig& cfg) {
    const int P = cfg.disc.P;
    bool with_targets = !inst.targets.empty();
    Observation obs(with_targets ? 3 * P : P, 0);
    geom::Vec2 self = inst.agents[agent].pos;
    for (int j = 0; j < graph.K; ++j) {
        if (!graph.connected(agent, j)) continue;
        auto idx = geom::sector_index(inst.agents[j].pos - self, cfg.disc);
        if (idx) ++obs[*idx];
    }
    if (with_targets) {
        for (int j = 0; j < graph.T; ++j) {
            if (!graph.sees_target(agent, j)) continue;
            auto idx = geom::sector_index(inst.targets[j] - self, cfg.disc);
            if (!idx) continue;
            ++obs[(inst.covered_mask[j] ? P : 2 * P) + *idx];
        }
    }
    return obs;
}

void step(TaskInstance& inst, std::span<const geom::Vec2> setpoints, const WorldConfig& cfg) {
    const int K = inst.K();
    if (static_cast<int>(setpoints.size()) != K)
        throw ActionCountMismatch(setpoints.size(), static_cast<std::size_t>(K));

    std::vector<geom::Vec2> accel(K);
    for (int i = 0; i < K; ++i) {
        accel[i] = cfg.kp * setpoints[i] - cfg.kd * inst.agents[i].vel;
        if (cfg.potential_field.enabled) {
            geom::Vec2 repulse{0.0, 0.0};
            double r0 = cfg.potential_field.repulse_radius;
            for (int j = 0; j < K; ++j) {
                if (j == i) continue;
                geom::Vec2 away = inst.agents[i].pos - inst.agents[j].pos;
                double d = away.norm();
                if (d >= r0) continue;
                d = std::max(d, 1e-9);
                repulse += cfg.potential_field.repulse_gain * (1.0 / d - 1.0 / r0) *
                           (away * (1.0 / d));
            }
            double mag = repulse.norm();
            if (mag > kMaxRepulseAccel) repulse = repulse * (kMaxRepulseAccel / mag);
            accel[i] += repulse;
        }
    }
    for (int i = 0; i < K; ++i) {
        inst.agents[i].vel += accel[i] * cfg.dt;
        inst.agents[i].pos += inst.agents[i].vel * cfg.dt;
    }
    recompute_covered(inst, cfg);
}

void recompute_covered(TaskInstance& inst, const WorldConfig& cfg) {
    inst.covered_mask.assign(inst.targets.size(), 0);
    for (std::size_t j = 0; j < inst.targets.size(); ++j) {
        for (const auto& a : inst.agents) {
            if (geom::distance(a.pos, inst.targets[j]) < cfg.epsilon) {
                inst.covered_mask[j] = 1;
                break;
            }
        }
    }
}

double max_pairwise_distance(const TaskInstance& inst) {
    double best = 0.0;
    for (int i = 0; i < inst.K(); ++i)
        for (int j = i + 1; j < inst.K(); ++j)
            best = std::max(best, geom::distance(inst.agents[i].pos, inst.agents[j].pos));
    return best;
}

bool rendezvous_done(const TaskInstance& inst, const WorldConfig& cfg) {
    return max_pairwise_distance(inst) <= cfg.epsilon;
}

bool assignment_done(const TaskInstance& inst) {
    return std::all_of(inst.covered_mask.begin(), inst.covered_mask.end(),
                       [](std::uint8_t c) { return c != 0; });
}

bool task_done(Task task, const TaskInstance& inst, const WorldConfig& cfg) {
    return task == Task::rendezvous ? rendezvous_done(inst, cfg) : assignment_done(inst);
}

}  // namespace swarmlab::world
