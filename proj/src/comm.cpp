#include "swarmlab/comm.hpp"

#include <string>

#include "swarmlab/errors.hpp"

namespace swarmlab::comm {

std::vector<double> CommBundle::flatten() const {
    if (groups.empty()) return {};
    std::size_t n = groups[0].size();
    if (mode == InflowMode::sum) {
        std::vector<double> out(n, 0.0);
        for (const auto& g : groups)
            for (std::size_t k = 0; k < n; ++k) out[k] += g[k];
        return out;
    }
    std::vector<double> out;
    out.reserve(groups.size() * n);
    for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
    return out;
}

std::optional<int> GroupAssignment::group_of(int agent) const {
    for (std::size_t p = 0; p < members.size(); ++p)
        for (int id : members[p])
            if (id == agent) return static_cast<int>(p);
    return std::nullopt;
}

GroupAssignment assign_groups(const world::ConnectivityGraph& graph,
                              const world::TaskInstance& inst, int agent,
                              const geom::Discretization& disc) {
    GroupAssignment out;
    out.members.resize(disc.P);
    geom::Vec2 self = inst.agents[agent].pos;
    for (int j = 0; j < graph.K; ++j) {
        if (j == agent) {
            out.members[0].push_back(j);
            continue;
        }
        if (!graph.connected(agent, j)) continue;
        auto idx = geom::sector_index(inst.agents[j].pos - self, disc);
        if (idx) out.members[*idx].push_back(j);
    }
    return out;
}

InflowResult aggregate_inflow(std::span<const Message> inbox, const GroupAssignment& groups,
                              InflowMode mode, int comm_size) {
    const int P = static_cast<int>(groups.members.size());
    InflowResult result;
    result.bundle.mode = mode;
    result.bundle.groups.assign(P, CommVector(comm_size, 0.0));

    std::vector<int> counts(P, 0);
    for (const Message& m : inbox) {
        if (static_cast<int>(m.payload.size()) != comm_size)
            throw LengthMismatch("comm payload length " + std::to_string(m.payload.size()) +
                                 " != comm size " + std::to_string(comm_size));
        auto p = groups.group_of(m.sender);
        if (!p) continue;  // sender left visibility; message dropped
        auto& acc = result.bundle.groups[*p];
        for (int k = 0; k < comm_size; ++k) acc[k] += m.payload[k];
        ++counts[*p];
    }
    for (int p = 0; p < P; ++p) {
        if (counts[p] == 0) continue;
        double inv = 1.0 / counts[p];
        for (auto& v : result.bundle.groups[p]) v *= inv;
    }
    for (const Message& m : inbox) {
        auto p = groups.group_of(m.sender);
        if (!p) continue;
        result.contributions.push_back({m.sender, m.sender_block, *p, 1.0 / counts[*p]});
    }
    return result;
}

std::vector<Outgoing> fanout_outflow(const CommBundle& bundle, const GroupAssignment& groups) {
    std::vector<Outgoing> out;
    for (std::size_t p = 0; p < groups.members.size(); ++p) {
        for (int id : groups.members[p]) {
            out.push_back({id, static_cast<int>(p), bundle.groups[p]});
        }
    }
    return out;
}

void CommState::post(int sender, int receiver, int sender_block, CommVector payload) {
    next_[receiver].push_back({sender, sender_block, std::move(payload)});
}

void CommState::advance() {
    inbox_ = std::move(next_);
    next_.assign(inbox_.size(), {});
}

void CommState::reset() {
    for (auto& box : inbox_) box.clear();
    for (auto& box : next_) box.clear();
}

}  // namespace swarmlab::comm
