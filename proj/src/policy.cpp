#include "swarmlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swarmlab/errors.hpp"

namespace swarmlab::policy {

namespace {
constexpr double kBigCost = 1e18;
}

int ActionDistribution::argmax() const {
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

ActionDistribution one_hot(int P, int index) {
    ActionDistribution d;
    d.probs.assign(P, 0.0);
    d.probs[index] = 1.0;
    return d;
}

int nearest_offset(geom::Vec2 target, std::span<const geom::Vec2> offsets) {
    int best = 0;
    double best_d = (target - offsets[0]).norm_sq();
    for (std::size_t p = 1; p < offsets.size(); ++p) {
        double d = (target - offsets[p]).norm_sq();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(p);
        }
    }
    return best;
}

GlobalState GlobalState::from(const world::TaskInstance& inst) {
    GlobalState s;
    s.positions.reserve(inst.agents.size());
    for (const auto& a : inst.agents) s.positions.push_back(a.pos);
    s.targets = inst.targets;
    return s;
}

std::vector<ActionDistribution> oracle_rendezvous(const GlobalState& state,
                                                  const geom::Discretization& disc) {
    geom::Vec2 goal = geom::smallest_enclosing_circle(state.positions).center;
    auto offsets = geom::action_offsets(disc);
    std::vector<ActionDistribution> out;
    out.reserve(state.positions.size());
    for (const auto& pos : state.positions)
        out.push_back(one_hot(disc.P, nearest_offset(goal - pos, offsets)));
    return out;
}

ActionDistribution circumcenter_law(std::span<const geom::Vec2> rel_neighbours,
                                    const geom::Discretization& disc) {
    std::vector<geom::Vec2> pts;
    pts.reserve(rel_neighbours.size() + 1);
    pts.push_back({0.0, 0.0});
    pts.insert(pts.end(), rel_neighbours.begin(), rel_neighbours.end());
    geom::Vec2 goal = geom::smallest_enclosing_circle(pts).center;
    auto offsets = geom::action_offsets(disc);
    return one_hot(disc.P, nearest_offset(goal, offsets));
}

ActionDistribution averaging_law(std::span<const geom::Vec2> rel_neighbours,
                                 const geom::Discretization& disc) {
    geom::Vec2 mean{0.0, 0.0};
    for (const auto& r : rel_neighbours) mean += r;
    mean = mean * (1.0 / (1.0 + static_cast<double>(rel_neighbours.size())));
    auto offsets = geom::action_offsets(disc);
    return one_hot(disc.P, nearest_offset(mean, offsets));
}

namespace {

// Classic O(n^3) Hungarian with potentials; cost is a dense square matrix.
std::vector<int> hungarian_min_sum(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

bool try_augment(int row, const std::vector<std::vector<int>>& adj, std::vector<char>& used,
                 std::vector<int>& match_col) {
    for (int col : adj[row]) {
        if (used[col]) continue;
        used[col] = 1;
        if (match_col[col] < 0 || try_augment(match_col[col], adj, used, match_col)) {
            match_col[col] = row;
            return true;
        }
    }
    return false;
}

bool perfect_matching_exists(const std::vector<std::vector<double>>& dist, double limit) {
    const int n = static_cast<int>(dist.size());
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (dist[i][j] <= limit) adj[i].push_back(j);
    std::vector<int> match_col(n, -1);
    for (int i = 0; i < n; ++i) {
        std::vector<char> used(n, 0);
        if (!try_augment(i, adj, used, match_col)) return false;
    }
    return true;
}

}  // namespace

Assignment bottleneck_assignment(std::span<const geom::Vec2> agents,
                                 std::span<const geom::Vec2> targets,
                                 AssignmentObjective objective) {
    const int n = static_cast<int>(agents.size());
    if (n == 0 || targets.size() != agents.size())
        throw SizeMismatch("assignment needs equal, nonempty agent and target sets");

    std::vector<std::vector<double>> dist(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist[i][j] = geom::distance(agents[i], targets[j]);

    std::vector<int> perm;
    if (objective == AssignmentObjective::sum) {
        perm = hungarian_min_sum(dist);
    } else {
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(n) * n);
        for (const auto& row : dist) vals.insert(vals.end(), row.begin(), row.end());
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        // Smallest distance bound admitting a perfect matching.
        std::size_t lo = 0, hi = vals.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (perfect_matching_exists(dist, vals[mid]))
                hi = mid;
            else
                lo = mid + 1;
        }
        double bound = vals[lo];
        // Sum-minimal matching among those achieving the optimal bottleneck.
        std::vector<std::vector<double>> restricted(n, std::vector<double>(n, kBigCost));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (dist[i][j] <= bound) restricted[i][j] = dist[i][j];
        perm = hungarian_min_sum(restricted);
    }

    Assignment a;
    a.target_of = std::move(perm);
    for (int i = 0; i < n; ++i) a.bottleneck = std::max(a.bottleneck, dist[i][a.target_of[i]]);
    return a;
}

std::vector<ActionDistribution> oracle_assignment(const GlobalState& state,
                                                  const Assignment& assignment,
                                                  const geom::Discretization& disc,
                                                  double epsilon) {
    auto offsets = geom::action_offsets(disc);
    std::vector<ActionDistribution> out;
    out.reserve(state.positions.size());
    for (std::size_t i = 0; i < state.positions.size(); ++i) {
        geom::Vec2 rel = state.targets[assignment.target_of[i]] - state.positions[i];
        int action = rel.norm() < epsilon ? 0 : nearest_offset(rel, offsets);
        out.push_back(one_hot(disc.P, action));
    }
    return out;
}

LearnedOutput learned_policy(const world::Observation& obs, const comm::CommBundle& inflow,
                             const nn::PolicyParams& params) {
    const auto& spec = params.spec;
    std::vector<double> obs_d(obs.begin(), obs.end());
    auto res = nn::forward(params, obs_d, inflow.flatten());

    LearnedOutput out;
    out.dist.probs = nn::softmax(res.logits);
    out.outflow.mode = comm::InflowMode::concat;
    out.outflow.groups.resize(spec.P);
    const int n = spec.comm_size;
    for (int p = 0; p < spec.P; ++p) {
        if (n == 0) continue;
        if (spec.inflow_mode == comm::InflowMode::sum) {
            out.outflow.groups[p] = res.comm_out;  // broadcast head
        } else {
            out.outflow.groups[p].assign(res.comm_out.begin() + static_cast<std::size_t>(p) * n,
                                         res.comm_out.begin() +
                                             static_cast<std::size_t>(p + 1) * n);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

class OracleRendezvousController final : public Controller {
  public:
    std::vector<int> act(const world::TaskInstance& inst, const world::ConnectivityGraph&,
                         const world::WorldConfig& cfg, Rng&) override {
        auto dists = oracle_rendezvous(GlobalState::from(inst), cfg.disc);
        std::vector<int> actions(dists.size());
        for (std::size_t i = 0; i < dists.size(); ++i) actions[i] = dists[i].argmax();
        return actions;
    }
};

class OracleAssignmentController final : public Controller {
  public:
    OracleAssignmentController(AssignmentObjective objective, bool reassign)
        : objective_(objective), reassign_(reassign) {}

    void reset(const world::TaskInstance& inst) override {
        auto state = GlobalState::from(inst);
        assignment_ = bottleneck_assignment(state.positions, state.targets, objective_);
    }

    std::vector<int> act(const world::TaskInstance& inst, const world::ConnectivityGraph&,
                         const world::WorldConfig& cfg, Rng&) override {
        auto state = GlobalState::from(inst);
        if (reassign_)
            assignment_ = bottleneck_assignment(state.positions, state.targets, objective_);
        auto dists = oracle_assignment(state, assignment_, cfg.disc, cfg.epsilon);
        std::vector<int> actions(dists.size());
        for (std::size_t i = 0; i < dists.size(); ++i) actions[i] = dists[i].argmax();
        return actions;
    }

  private:
    AssignmentObjective objective_;
    bool reassign_;
    Assignment assignment_;
};

template <typename Law>
class LocalLawController final : public Controller {
  public:
    explicit LocalLawController(Law law) : law_(law) {}

    std::vector<int> act(const world::TaskInstance& inst, const world::ConnectivityGraph& graph,
                         const world::WorldConfig& cfg, Rng&) override {
        std::vector<int> actions(inst.K());
        for (int i = 0; i < inst.K(); ++i) {
            std::vector<geom::Vec2> rel;
            for (int j : graph.neighbours(i)) rel.push_back(inst.agents[j].pos - inst.agents[i].pos);
            actions[i] = law_(rel, cfg.disc).argmax();
        }
        return actions;
    }

  private:
    Law law_;
};

class StayController final : public Controller {
  public:
    std::vector<int> act(const world::TaskInstance& inst, const world::ConnectivityGraph&,
                         const world::WorldConfig&, Rng&) override {
        return std::vector<int>(inst.K(), 0);
    }
};

class LearnedController final : public Controller {
  public:
    LearnedController(nn::PolicyParams params, LearnedControllerOptions opts)
        : params_(std::move(params)), opts_(opts) {}

    void reset(const world::TaskInstance& inst) override {
        comm_ = std::make_unique<comm::CommState>(inst.K());
    }

    std::vector<int> act(const world::TaskInstance& inst, const world::ConnectivityGraph& graph,
                         const world::WorldConfig& cfg, Rng& rng) override {
        const auto& spec = params_.spec;
        if (spec.P != cfg.disc.P)
            throw ConfigMismatch("checkpoint P does not match the world discretization");
        if (!comm_) reset(inst);
        const int n = spec.comm_size;
        const bool use_comm = opts_.comm_enabled && n > 0;

        std::vector<int> actions(inst.K());
        for (int i = 0; i < inst.K(); ++i) {
            auto obs = world::observe(inst, graph, i, cfg);
            if (static_cast<int>(obs.size()) != spec.obs_dim)
                throw ConfigMismatch("checkpoint obs_dim does not match the task");
            auto groups = comm::assign_groups(graph, inst, i, cfg.disc);
            comm::CommBundle inflow;
            inflow.mode = spec.inflow_mode;
            inflow.groups.assign(spec.P, comm::CommVector(n, 0.0));
            if (use_comm)
                inflow = comm::aggregate_inflow(comm_->inbox(i), groups, spec.inflow_mode, n)
                             .bundle;
            auto out = learned_policy(obs, inflow, params_);
            actions[i] = opts_.argmax ? out.dist.argmax() : rng.categorical(out.dist.probs);
            if (use_comm) {
                for (auto& o : fanout_outflow(out.outflow, groups)) {
                    int block = spec.inflow_mode == comm::InflowMode::sum ? 0 : o.group;
                    comm_->post(i, o.receiver, block, std::move(o.payload));
                }
            }
        }
        if (use_comm) comm_->advance();
        return actions;
    }

  private:
    nn::PolicyParams params_;
    LearnedControllerOptions opts_;
    std::unique_ptr<comm::CommState> comm_;
};

}  // namespace

std::unique_ptr<Controller> make_oracle_controller(world::Task task,
                                                   AssignmentObjective objective,
                                                   bool reassign_every_step) {
    if (task == world::Task::rendezvous) return std::make_unique<OracleRendezvousController>();
    return std::make_unique<OracleAssignmentController>(objective, reassign_every_step);
}

std::unique_ptr<Controller> make_circumcenter_controller() {
    auto law = [](std::span<const geom::Vec2> rel, const geom::Discretization& disc) {
        return circumcenter_law(rel, disc);
    };
    return std::make_unique<LocalLawController<decltype(law)>>(law);
}

std::unique_ptr<Controller> make_averaging_controller() {
    auto law = [](std::span<const geom::Vec2> rel, const geom::Discretization& disc) {
        return averaging_law(rel, disc);
    };
    return std::make_unique<LocalLawController<decltype(law)>>(law);
}

std::unique_ptr<Controller> make_stay_controller() { return std::make_unique<StayController>(); }

std::unique_ptr<Controller> make_learned_controller(nn::PolicyParams params,
                                                    LearnedControllerOptions opts) {
    return std::make_unique<LearnedController>(std::move(params), opts);
}

std::unique_ptr<Controller> make_controller(const std::string& spec, world::Task task,
                                            const world::WorldConfig& cfg,
                                            AssignmentObjective objective,
                                            bool reassign_every_step, bool argmax) {
    if (spec == "oracle") return make_oracle_controller(task, objective, reassign_every_step);
    if (spec == "circumcenter") return make_circumcenter_controller();
    if (spec == "averaging") return make_averaging_controller();
    if (spec == "stay") return make_stay_controller();

    auto parse_learned = [&](const std::string& prefix,
                             bool comm_enabled) -> std::unique_ptr<Controller> {
        std::string path = spec.substr(prefix.size());
        auto ck = nn::load_checkpoint(path);
        std::string want = task == world::Task::rendezvous ? "rendezvous" : "assignment";
        if (ck.params.spec.task != want)
            throw ConfigMismatch("checkpoint task '" + ck.params.spec.task +
                                 "' does not match configured task '" + want + "'");
        if (ck.params.spec.P != cfg.disc.P)
            throw ConfigMismatch("checkpoint P does not match the world discretization");
        LearnedControllerOptions opts;
        opts.comm_enabled = comm_enabled;
        opts.argmax = argmax;
        return make_learned_controller(std::move(ck.params), opts);
    };
    if (spec.rfind("learned:", 0) == 0) return parse_learned("learned:", true);
    if (spec.rfind("learned-nocomm:", 0) == 0) return parse_learned("learned-nocomm:", false);
    throw ConfigMismatch("unknown policy spec '" + spec + "'");
}

}  // namespace swarmlab::policy
