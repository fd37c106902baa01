#pragma once

#include <filesystem>
#include <vector>

#include "swarmlab/trainer.hpp"
#include "swarmlab/world.hpp"

namespace swarmlab::config {

struct EvalConfig {
    int n_trials = 25;
    std::vector<int> K_list = {2, 5, 10, 20, 50, 100};
    std::vector<std::string> policies = {"oracle", "circumcenter"};
};

struct RunConfig {
    int version = 1;
    world::Task task = world::Task::rendezvous;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";
    world::WorldConfig world;
    trainer::TrainConfig train;
    EvalConfig eval;
};

// Loads and validates a JSON run configuration. Unknown task names, a missing
// or unsupported version field, or invariant violations raise ConfigMismatch.
RunConfig load(const std::filesystem::path& path);

}  // namespace swarmlab::config
