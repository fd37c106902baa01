#pragma once

#include <optional>
#include <span>
#include <vector>

#include "swarmlab/world.hpp"

namespace swarmlab::comm {

using CommVector = std::vector<double>;

// How a bundle of P per-group vectors collapses into the policy-network
// inflow: concatenation (P*n) or the sum of the group means (n).
enum class InflowMode { concat, sum };

struct CommBundle {
    std::vector<CommVector> groups;
    InflowMode mode = InflowMode::concat;

    // Flattened view fed to the policy network.
    std::vector<double> flatten() const;
};

// Partition of N_i(t) plus the agent itself into the P components; the agent
// sits in group 0 (relative position zero).
struct GroupAssignment {
    std::vector<std::vector<int>> members;  // per group, ascending ids

    std::optional<int> group_of(int agent) const;
};

GroupAssignment assign_groups(const world::ConnectivityGraph& graph,
                              const world::TaskInstance& inst, int agent,
                              const geom::Discretization& disc);

struct Message {
    int sender = 0;
    int sender_block = 0;  // block of the sender's comm head that produced the payload
    CommVector payload;
};

// One received message's contribution to a group mean; the backward pass
// routes gradient to sender_block with this weight.
struct InflowContribution {
    int sender = 0;
    int sender_block = 0;
    int recv_group = 0;
    double weight = 0.0;  // 1 / (messages in recv_group)
};

struct InflowResult {
    CommBundle bundle;
    std::vector<InflowContribution> contributions;
};

// Per-group arithmetic mean of the inbox messages, binned by the receiver's
// current groups. Messages from senders absent from the assignment are
// dropped; empty groups yield zero vectors. Throws LengthMismatch if a
// payload's length is not comm_size.
InflowResult aggregate_inflow(std::span<const Message> inbox, const GroupAssignment& groups,
                              InflowMode mode, int comm_size);

struct Outgoing {
    int receiver = 0;
    int group = 0;
    CommVector payload;
};

// Every member of group p (including self, if present) receives a copy of the
// bundle's group-p vector; empty groups send nothing. The bundle must be
// concat-structured (P group vectors).
std::vector<Outgoing> fanout_outflow(const CommBundle& bundle, const GroupAssignment& groups);

// Double-buffered mailboxes: messages posted during step t become readable
// after advance(), at step t+1, and are consumed exactly once.
class CommState {
  public:
    explicit CommState(int K) : inbox_(K), next_(K) {}

    const std::vector<Message>& inbox(int receiver) const { return inbox_[receiver]; }
    void post(int sender, int receiver, int sender_block, CommVector payload);
    void advance();
    void reset();

  private:
    std::vector<std::vector<Message>> inbox_;
    std::vector<std::vector<Message>> next_;
};

}  // namespace swarmlab::comm
